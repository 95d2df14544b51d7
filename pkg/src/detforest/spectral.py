"""Spectral analysis of characteristic polynomials.

Strip side: root structure and growth rates.  Torus side: Ronkin function
(averaged log-modulus over a torus of radii (e^x, e^y), computed by a
one-dimensional quadrature after integrating out one variable exactly with
Jensen's formula), its Legendre dual the surface tension, intersection
counts of the spectral curve with tori, the special divisor of the square
grid, and the correlation-decay classifier.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NumericalError, ValidationError
from .laurent import LaurentPoly1, LaurentPoly2, newton_polygon

REAL_ROOT_TOL = 1e-8
SEPARATION_TOL = 1e-8


# ---------------------------------------------------------------------------
# strip roots and growth rates


@dataclass(frozen=True)
class SpectralReport:
    roots: tuple  # all 2m roots, ascending
    leading_coeff: float
    massive: bool
    m: int
    growth: dict  # j -> a_j

    def top_roots(self):
        """lambda_1 <= ... <= lambda_m (the roots >= 1)."""
        return self.roots[self.m:]


def strip_roots(p: LaurentPoly1, massive=False, imag_tol=REAL_ROOT_TOL,
                sep_tol=SEPARATION_TOL) -> SpectralReport:
    """Roots of a reciprocal strip characteristic polynomial, validated.

    All 2m roots are found as eigenvalues of the companion matrix of
    z^m p(z).  Massless polynomials must show exactly one double root at 1
    and otherwise simple, real, positive roots; massive ones must have all
    roots simple, real, positive and away from 1.  Violations raise, since
    they signal an input that is not a strip Laplacian determinant.
    """
    if not p.coeffs:
        raise ValidationError("zero polynomial has no root structure")
    if not p.is_reciprocal(tol=1e-8):
        raise ValidationError("strip characteristic polynomials are reciprocal")
    m = p.degree_hi
    if m != -p.degree_lo or m < 1:
        raise ValidationError("expected symmetric exponent span [-m, m] with m >= 1")
    desc = np.array([p.coeffs.get(e, 0.0) for e in range(m, -m - 1, -1)], dtype=complex)
    scale = np.max(np.abs(desc))
    if not massive:
        # deflate the analytically known double root at 1; the companion
        # matrix splits a defective pair by ~sqrt(eps), far beyond imag_tol
        at_one = abs(np.polyval(desc, 1.0))
        if at_one > 1e-9 * scale:
            raise ValidationError(f"massless polynomial must vanish at z = 1 (|P(1)| = {at_one:.3e})")
        quot, rem = np.polydiv(desc, np.array([1.0, -1.0]))
        quot, rem2 = np.polydiv(quot, np.array([1.0, -1.0]))
        if max(np.max(np.abs(rem)), np.max(np.abs(rem2))) > 1e-7 * scale:
            raise ValidationError("deflation of the double root at z = 1 left a residual")
        roots = np.concatenate([np.roots(quot), [1.0, 1.0]])
    else:
        roots = np.roots(desc)
    bad = np.abs(roots.imag) > imag_tol * np.maximum(np.abs(roots), 1.0)
    if np.any(bad):
        worst = roots[np.argmax(np.abs(roots.imag))]
        raise ValidationError(f"non-real root {worst:.6g}; input is not a strip Laplacian polynomial")
    vals = np.sort(roots.real)
    if np.any(vals <= 0):
        raise ValidationError(f"nonpositive root {vals.min():.6g}")
    near_one = np.abs(vals - 1.0) <= sep_tol
    if massive:
        if np.any(near_one):
            raise ValidationError("massive polynomial must not vanish at z = 1")
    else:
        if near_one.sum() != 2:
            raise ValidationError(
                f"massless polynomial needs a double root at 1, found {near_one.sum()} nearby"
            )
    # distinctness, the double root at 1 excepted
    for a, b in zip(vals, vals[1:]):
        if b - a <= sep_tol * max(abs(a), 1.0) and not (abs(a - 1) <= sep_tol and abs(b - 1) <= sep_tol):
            raise ValidationError(f"roots {a:.8g} and {b:.8g} are not distinct")
    lead = p.coeffs[m].real
    top = vals[m:]
    growth = {}
    jlo = 0 if massive else 1
    for j in range(jlo, m + 1):
        growth[j] = math.log(abs(lead)) + float(np.sum(np.log(top[j:])))
    return SpectralReport(tuple(vals), lead, massive, m, growth)


def growth_rate(report: SpectralReport, j: int) -> float:
    """a_j = log|C_m| + sum_{i > j} log lambda_i, the free energy of mu_j."""
    if j not in report.growth:
        lo = 0 if report.massive else 1
        raise ValidationError(f"j must be in [{lo}, {report.m}], got {j}")
    return report.growth[j]


# ---------------------------------------------------------------------------
# Ronkin function


def _coeff_rows(p: LaurentPoly2):
    """w-exponent -> (z-exponents, z-coefficients) arrays, ascending in j."""
    rows = {}
    for (i, j), c in p.coeffs.items():
        rows.setdefault(j, []).append((i, c))
    out = []
    for j in sorted(rows):
        es = np.array([e for e, _ in rows[j]])
        cs = np.array([c for _, c in rows[j]], dtype=complex)
        out.append((j, es, cs))
    return out


def _roots_stack(Q, lenient=False):
    """Roots of each row of Q (ascending coefficients, shape (n, s+1)).

    With lenient=True a vanishing leading coefficient is floored, which
    parks the escaping root near 1/floor (the curve's point at infinity);
    harnack tracking needs this, quadratures must not.
    """
    n, s1 = Q.shape
    s = s1 - 1
    if s == 0:
        return np.zeros((n, 0), dtype=complex)
    lead = Q[:, -1].copy()
    rowmax = np.max(np.abs(Q), axis=1)
    tiny = np.abs(lead) < 1e-14 * rowmax
    if np.any(tiny):
        if not lenient:
            raise NumericalError("leading coefficient vanished on the quadrature contour")
        lead = np.where(tiny, lead + 1e-14 * rowmax, lead)
        Q = Q.copy()
        Q[:, -1] = lead
    if s == 1:
        return (-Q[:, 0] / lead)[:, None]
    if s == 2:
        a, b, c = Q[:, 2], Q[:, 1], Q[:, 0]
        disc = np.sqrt(b * b - 4 * a * c)
        # sign choice avoiding cancellation; the mate comes from Vieta
        tbig = np.where(np.abs(b + disc) >= np.abs(b - disc), b + disc, b - disc)
        r1 = -tbig / (2 * a)
        r2 = c / (a * r1)
        return np.stack([r1, r2], axis=1)
    comp = np.zeros((n, s, s), dtype=complex)
    comp[:, 1:, :-1] = np.eye(s - 1)
    comp[:, :, -1] = -Q[:, :-1] / lead[:, None]
    return np.linalg.eigvals(comp)


def _jensen_data(p: LaurentPoly2, x: float, N: int):
    """Per-theta data for R(x, .): (mean log|lead|, j_lo, sorted log|roots|).

    Integrating log|P(z, w)| over |w| = e^y for fixed z = e^{x+i theta} is
    exact by Jensen's formula: log|q_hi(z)| + j_lo y + sum_i max(y, log|w_i|).
    """
    rows = _coeff_rows(p)
    js = [j for j, _, _ in rows]
    jlo, jhi = js[0], js[-1]
    th = 2.0 * np.pi * (np.arange(N) + 0.5) / N
    z = np.exp(x + 1j * th)
    Q = np.zeros((N, jhi - jlo + 1), dtype=complex)
    for j, es, cs in rows:
        Q[:, j - jlo] = (z[:, None] ** es[None, :] @ cs)
    if Q.shape[1] == 1:
        return float(np.mean(np.log(np.abs(Q[:, 0])))), jlo, np.zeros(0)
    roots = _roots_stack(Q)
    mags = np.abs(roots).ravel()
    if np.any(mags == 0.0):
        raise NumericalError("zero root in Jensen reduction (non-pruned low coefficient?)")
    c0 = float(np.mean(np.log(np.abs(Q[:, -1]))))
    return c0, jlo, np.log(mags)


def _ronkin_fixed(p, x, y, N):
    c0, jlo, b = _jensen_data(p, x, N)
    extra = float(np.maximum(y, b).sum()) / N if b.size else 0.0
    return c0 + jlo * y + extra


def ronkin(p: LaurentPoly2, x: float, y: float, rtol=1e-6, n0=256, nmax=1 << 17) -> float:
    """Average of log|P| over the torus |z| = e^x, |w| = e^y.

    Midpoint nodes in theta keep the contour off real zeros of P (the
    remaining singularities of the integrand are logarithmic and
    integrable); the grid doubles until two estimates agree to rtol.
    """
    if not p.coeffs:
        raise ValidationError("Ronkin function of the zero polynomial")
    prev = _ronkin_fixed(p, x, y, n0)
    n = 2 * n0
    while n <= nmax:
        cur = _ronkin_fixed(p, x, y, n)
        if abs(cur - prev) < rtol:
            return cur
        prev = cur
        n *= 2
    raise ConvergenceError(
        f"Ronkin quadrature did not converge: last estimates {prev:.10g} at N={n // 2}"
    )


# ---------------------------------------------------------------------------
# surface tension


@dataclass(frozen=True)
class AmoebaPoint:
    x: float
    y: float
    sigma: float
    slope: tuple


def _golden_min(f, lo, hi, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def _pl_min_y(jlo, b_sorted, t, n_theta, box):
    """Exact minimizer of jlo*y + (1/N) sum max(y, b) - t*y (piecewise linear).

    The subgradient is jlo + #{b < y}/N - t; flat optimum intervals resolve
    to their midpoint, which also restores even symmetry exactly.
    """
    c = (t - jlo) * n_theta
    nb = b_sorted.size
    if c <= 1e-12:
        return -box
    if c >= nb - 1e-12:
        return box
    k = int(np.floor(c))
    if abs(c - k) < 1e-12:  # flat piece between consecutive breakpoints
        return float(min(max((b_sorted[k - 1] + b_sorted[k]) / 2.0, -box), box))
    return float(min(max(b_sorted[k], -box), box))


def _edge_sigma(p, v1, v2, s, t, box):
    """sigma at a slope on the boundary edge [v1, v2] of the Newton polygon.

    Along the outward valley only the monomials on the edge survive, and
    the limit is the one-dimensional Legendre dual of the edge polynomial
    Q(u) = sum_k c_{v1 + k d} u^k (d the primitive edge direction):
    sigma = min_xi [log|c_K| + sum_r max(xi, log|r|) - kappa xi], evaluated
    exactly from the roots r of Q.  kappa is the position of (s, t) along
    the edge in primitive steps.
    """
    (i1, j1), (i2, j2) = v1, v2
    g = math.gcd(abs(i2 - i1), abs(j2 - j1))
    du, dv = (i2 - i1) // g, (j2 - j1) // g
    coeffs = []
    for k in range(g + 1):
        coeffs.append(p.coeffs.get((i1 + k * du, j1 + k * dv), 0.0))
    denom = du * (s - i1) + dv * (t - j1)
    kappa = denom / (du * du + dv * dv)
    qc = np.array(coeffs, dtype=complex)
    K = len(qc) - 1
    roots = np.roots(qc[::-1])
    b = np.sort(np.log(np.abs(roots)))
    lead = math.log(abs(qc[-1]))
    nu = np.array([dv, -du], dtype=float)  # outward normal candidate
    mid = (np.array(v1) + np.array(v2)) / 2.0
    if nu @ mid < 0:
        nu = -nu
    nu /= np.hypot(*nu)

    def val(xi):
        return lead + float(np.maximum(xi, b).sum()) - kappa * xi

    if kappa <= 1e-12:
        sigma = math.log(abs(qc[0]))
        xi = b[0] - 1.0 if b.size else 0.0
    elif kappa >= K - 1e-12:
        sigma = lead
        xi = (b[-1] + 1.0) if b.size else 0.0
    else:
        k = int(np.floor(kappa))
        if abs(kappa - k) < 1e-12:
            xi = float((b[k - 1] + b[k]) / 2.0)
        else:
            xi = float(b[k])
        sigma = val(xi)
    scale = du * du + dv * dv
    x, y = box * nu[0] + xi * du / scale, box * nu[1] + xi * dv / scale
    return AmoebaPoint(float(x), float(y), float(sigma), (s, t))


def surface_tension(p: LaurentPoly2, s: float, t: float, tol=1e-7, box=25.0,
                    N=4096, max_sweeps=60) -> AmoebaPoint:
    """Legendre dual sigma(s, t) = min_{x,y} R(x, y) - s x - t y.

    Interior slopes: coordinate descent on the quadrature approximant of R.
    The y-step is solved exactly (the restriction is piecewise linear in y
    for the Jensen root data of the current x), the x-step by golden
    section, and each sweep ends with a line search along the sweep
    direction.  Slopes on the boundary of the Newton polygon are computed
    exactly through the edge-polynomial reduction (the argmin escapes to
    infinity along the outward normal; the reported point sits on the
    search box).  For reciprocal p the interior approximant is even under
    (x, y) -> (-x, -y), and axis-snapped candidates are kept when they tie.
    """
    polygon = newton_polygon(p)
    if not polygon.contains(s, t, tol=1e-9):
        raise ValidationError(f"slope ({s}, {t}) lies outside the Newton polygon")
    verts = polygon.vertices
    if len(verts) >= 2 and not polygon.interior_contains(s, t, margin=1e-9):
        for k in range(len(verts)):
            v1 = verts[k]
            v2 = verts[(k + 1) % len(verts)] if len(verts) > 2 or k == 0 else None
            if v2 is None:
                continue
            cross = (v2[0] - v1[0]) * (t - v1[1]) - (v2[1] - v1[1]) * (s - v1[0])
            dot = (s - v1[0]) * (v2[0] - v1[0]) + (t - v1[1]) * (v2[1] - v1[1])
            ll = (v2[0] - v1[0]) ** 2 + (v2[1] - v1[1]) ** 2
            if abs(cross) <= 1e-9 * math.sqrt(ll) and -1e-12 <= dot <= ll + 1e-12:
                return _edge_sigma(p, v1, v2, s, t, box)
    x, y = 0.0, 0.0

    def value_at(xc, yc, data=None):
        c0, jlo, b = data if data is not None else _jensen_data(p, xc, N)
        r = c0 + jlo * yc + (float(np.maximum(yc, b).sum()) / N if b.size else 0.0)
        return r - s * xc - t * yc

    half_width = box
    for sweep in range(max_sweeps):
        x_prev, y_prev = x, y
        c0, jlo, b = _jensen_data(p, x, N)
        y = _pl_min_y(jlo, np.sort(b), t, N, box) if b.size else y
        while True:  # localized bracket, re-expanded if the minimizer pins it
            lo, hi = max(x - half_width, -box), min(x + half_width, box)
            xn = _golden_min(lambda xx: value_at(xx, y), lo, hi, tol / 4)
            pinned = (xn - lo < 2 * tol and lo > -box) or (hi - xn < 2 * tol and hi < box)
            if not pinned:
                break
            half_width *= 4
        x = xn
        half_width = max(4 * tol, min(half_width, 4 * abs(x - x_prev) + 0.5))
        dx, dy = x - x_prev, y - y_prev
        if abs(dx) + abs(dy) > 10 * tol:
            amax = box
            for d, c in ((dx, x), (dy, y)):
                if d > 1e-15:
                    amax = min(amax, (box - c) / d)
                elif d < -1e-15:
                    amax = min(amax, (-box - c) / d)
            if amax > 0:
                alpha = _golden_min(lambda a: value_at(x + a * dx, y + a * dy),
                                    0.0, amax, tol / (4 * max(abs(dx) + abs(dy), 1e-12)))
                x, y = x + alpha * dx, y + alpha * dy
        if abs(x - x_prev) < tol and abs(y - y_prev) < tol:
            break
    # prefer exact axis points among ties (reciprocal p makes the objective even)
    best = (value_at(x, y), (x == 0.0) + (y == 0.0), x, y)
    for cand in ((0.0, y), (x, 0.0), (0.0, 0.0)):
        zeros = (cand[0] == 0.0) + (cand[1] == 0.0)
        val = value_at(*cand)
        if val < best[0] - 1e-12 or (val < best[0] + 1e-12 and zeros > best[1]):
            best = (val, zeros, cand[0], cand[1])
    sigma, _, x, y = best
    return AmoebaPoint(x, y, sigma, (s, t))


# ---------------------------------------------------------------------------
# Harnack verification


@dataclass(frozen=True)
class HarnackReport:
    count: int
    classification: str  # empty | two_conjugate | real_node | boundary_tangent | multiple
    points: tuple  # (z, w) pairs

    def passes(self):
        return self.count <= 2


def _w_roots_at(p, zvals, lenient=False):
    rows = _coeff_rows(p)
    js = [j for j, _, _ in rows]
    jlo, jhi = js[0], js[-1]
    Q = np.zeros((len(zvals), jhi - jlo + 1), dtype=complex)
    for j, es, cs in rows:
        Q[:, j - jlo] = (np.asarray(zvals)[:, None] ** es[None, :] @ cs)
    return _roots_stack(Q, lenient=lenient)


def _match_rows(roots):
    """Reorder each row of roots to continue the branch of the previous row."""
    n, s = roots.shape
    out = roots.copy()
    for k in range(1, n):
        prev, cur = out[k - 1], roots[k]
        if s <= 3:
            best, bestp = None, None
            for perm in itertools.permutations(range(s)):
                cost = sum(abs(prev[i] - cur[p]) for i, p in enumerate(perm))
                if best is None or cost < best:
                    best, bestp = cost, perm
            out[k] = cur[list(bestp)]
        else:
            taken = np.zeros(s, bool)
            new = np.empty(s, complex)
            for i in np.argsort([-abs(v) for v in prev]):
                d = np.abs(cur - prev[i])
                d[taken] = np.inf
                jbest = int(np.argmin(d))
                taken[jbest] = True
                new[i] = cur[jbest]
            out[k] = new
    return out


def _refine_touch(p, r1, r2, th_lo, th_hi, w_hint, rounds=6, pts=33):
    """Zoom on a candidate |w| = r2 touch of one branch (anchored by w_hint).

    Returns (min |g|, theta*, w*, crossing).  Each zoom follows the root
    closest to the hint so that coincident candidates on different branches
    refine to their own intersection points.
    """
    lo, hi = th_lo, th_hi
    hint = w_hint
    for _ in range(rounds):
        th = np.linspace(lo, hi, pts)
        roots = _w_roots_at(p, r1 * np.exp(1j * th), lenient=True)
        branch = np.argmin(np.abs(roots - hint), axis=1)
        vals = roots[np.arange(len(th)), branch]
        gb = np.abs(np.abs(vals) - r2)
        k = int(np.argmin(gb))
        hint = vals[k]
        span = (hi - lo) / (pts - 1)
        lo, hi = th[k] - span, th[k] + span
    th_star = (lo + hi) / 2
    roots = _w_roots_at(p, np.array([r1 * np.exp(1j * th_star)]), lenient=True)[0]
    b = int(np.argmin(np.abs(roots - hint)))
    g_star = abs(abs(roots[b]) - r2)
    ends = _w_roots_at(p, r1 * np.exp(1j * np.array([lo, hi])), lenient=True)
    ge = []
    for row in ends:
        bb = int(np.argmin(np.abs(row - hint)))
        ge.append(abs(row[bb]) - r2)
    crossing = ge[0] * ge[1] < 0
    return float(g_star), th_star, roots[b], bool(crossing)


def harnack_check(p: LaurentPoly2, r1: float, r2: float, nsamples=1024,
                  touch_tol=1e-7) -> HarnackReport:
    """Count intersections of {P = 0} with the torus |z| = r1, |w| = r2.

    Roots w of P(z, .) are tracked around the circle |z| = r1; transversal
    crossings of |w| = r2 are counted from sign changes and near-touches
    are refined by local zooming.  Two branches meeting at a common touch
    point form a real node.  A count of at most two is the simple-Harnack
    bound.
    """
    if not p.coeffs:
        raise ValidationError("harnack_check of the zero polynomial")
    if r1 <= 0 or r2 <= 0:
        raise ValidationError("torus radii must be positive")
    th = 2.0 * np.pi * np.arange(nsamples) / nsamples
    raw = _w_roots_at(p, r1 * np.exp(1j * th), lenient=True)
    # magnitude cap: branches escaping to the curve's points at infinity stay
    # trackable and far from the torus
    cap = 1e6 * (1.0 + r2)
    mags = np.abs(raw)
    raw = np.where(mags > cap, raw * (cap / np.where(mags > 0, mags, 1.0)), raw)
    roots = _match_rows(raw)
    n, s = roots.shape
    if s == 0:
        return HarnackReport(0, "empty", ())
    scale = 1.0 + r2
    # tracking sanity where it matters: jumps of branches near the torus
    step = np.abs(np.diff(roots, axis=0))
    near = np.minimum(np.abs(np.abs(roots[:-1]) - r2), np.abs(np.abs(roots[1:]) - r2)) < r2
    jumpy = step > 0.5 * (np.abs(roots[:-1]) + np.abs(roots[1:])) + scale
    if np.any(near & jumpy):
        raise NumericalError("branch tracking ambiguous near the torus; rerun with more samples")
    g = np.abs(roots) - r2
    events = []  # (z, w, kind) kind in {"cross", "touch"}
    dth = 2 * np.pi / nsamples
    for b in range(s):
        gb = np.concatenate([g[:, b], g[:1, b]])
        wb = np.concatenate([roots[:, b], roots[:1, b]])
        for k in range(nsamples):
            a0, a1 = gb[k], gb[k + 1]
            if abs(a0) > touch_tol * scale and abs(a1) > touch_tol * scale and a0 * a1 < 0:
                frac = abs(a0) / (abs(a0) + abs(a1))
                thc = th[k] + frac * dth
                wc = wb[k] + frac * (wb[k + 1] - wb[k])
                events.append((r1 * np.exp(1j * thc), wc, "cross"))
        # candidate touches: local minima of |g| below a coarse threshold
        absg = np.abs(g[:, b])
        coarse = max(0.05 * scale, 20.0 * dth)
        for k in range(nsamples):
            if absg[k] <= absg[k - 1] and absg[k] <= absg[(k + 1) % nsamples] and absg[k] < coarse:
                mn, thc, wc, crossing = _refine_touch(
                    p, r1, r2, th[k] - dth, th[k] + dth, roots[k, b]
                )
                if mn < touch_tol * scale:
                    events.append((r1 * np.exp(1j * thc), wc, "cross" if crossing else "touch"))
    # merge events at the same point of the curve
    merged = []
    for (z, w, kind) in events:
        hit = False
        for mev in merged:
            if abs(mev[0] - z) < 1e-5 * (1 + r1) and abs(mev[1] - w) < 1e-5 * scale:
                mev[2] += 1
                hit = True
                break
        if not hit:
            merged.append([z, w, 1, kind])
    count = len(merged)
    if count == 0:
        cls = "empty"
    elif count == 1:
        z, w, mult, kind = merged[0]
        node = mult >= 2 or _is_double_root(p, z, w, scale)
        cls = "real_node" if node else "boundary_tangent"
    elif count == 2:
        cls = "two_conjugate"
    else:
        cls = "multiple"
    return HarnackReport(count, cls, tuple((complex(m[0]), complex(m[1])) for m in merged))


def _is_double_root(p, z, w, scale):
    others = _w_roots_at(p, np.array([z]))[0]
    close = np.sort(np.abs(others - w))
    return len(close) >= 2 and close[1] < 1e-4 * scale


# ---------------------------------------------------------------------------
# special divisor on the square grid


def special_divisor_grid(n: int):
    """Solutions u of the two circle-argument conditions on the n-fold grid.

    The square-grid spectral curve 4 - xi - 1/xi - eta - 1/eta = 0 has the
    rational parametrization

        xi  = (u+a)(u+b) / ((u-a)(u-b)),   a = e^{i pi/4},
        eta = (u+a)(u-b) / ((u-a)(u+b)),   b = e^{3i pi/4};

    divisor points are the u in the open unit disk for which arg(xi) and
    arg(eta) are multiples of pi/n, excluding the both-real case u = 0.
    There are exactly 2n^2 - 2n of them.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    pts = []
    for pidx in range(n + 1, 3 * n):
        for qidx in range(n + 1, 3 * n):
            if (pidx - qidx) % 2 != 0 or (pidx == 2 * n and qidx == 2 * n):
                continue
            # arg((u+a)/(u-a)) = p pi/2n and arg((u+b)/(u-b)) = q pi/2n are circles;
            # inside the disk they reduce to x - y = rho tanA/sqrt2, x + y = rho tanB/sqrt2
            u1 = math.tan(pidx * math.pi / (2 * n)) / math.sqrt(2.0)
            u2 = math.tan(qidx * math.pi / (2 * n)) / math.sqrt(2.0)
            ssum = u1 * u1 + u2 * u2
            rho = (1.0 - math.sqrt(1.0 + 2.0 * ssum)) / ssum
            pts.append(complex(rho * (u1 + u2) / 2.0, rho * (u2 - u1) / 2.0))
    return np.array(pts)


def divisor_xi_eta(u):
    a = np.exp(1j * np.pi / 4)
    b = np.exp(3j * np.pi / 4)
    xi = (u + a) * (u + b) / ((u - a) * (u - b))
    eta = (u + a) * (u - b) / ((u - a) * (u + b))
    return xi, eta


# ---------------------------------------------------------------------------
# correlation decay classification


@dataclass(frozen=True)
class DecayReport:
    classification: str  # "quadratic" | "exponential"
    rate: float  # power-law exponent or exponential rate of the fitted model
    r_squared: float
    r_squared_other: float
    distances: tuple
    magnitudes: tuple
    contour: tuple  # (x, y)


def _linear_fit(xs, ys):
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    return float(coef[0]), 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def correlation_class(p: LaurentPoly2, s: float, t: float, max_dist=24,
                      grid=512) -> DecayReport:
    """Classify the decay of Fourier coefficients of 1/P on the mu_{s,t} torus.

    Coefficients are computed by a midpoint-offset FFT on the contour
    through the surface-tension argmin.  Consecutive differences along a
    coordinate ray are enveloped (running maximum over a +-2 window) and
    log-magnitudes are fitted against log d (power law, reported as the
    quadratic class) and against d (exponential); the model with the higher
    coefficient of determination wins.  Differencing removes the additive
    constant (and, at a real node, the logarithmic part) that the raw
    coefficients carry when the contour meets the spectral curve.
    """
    polygon = newton_polygon(p)
    if not polygon.interior_contains(s, t, margin=1e-9):
        raise ValidationError(f"slope ({s}, {t}) must lie in the interior of the Newton polygon")
    at = surface_tension(p, s, t)
    N = grid
    while N < 8 * max_dist:
        N *= 2
    k = 2.0 * np.pi * (np.arange(N) + 0.5) / N
    z = np.exp(at.x + 1j * k)[:, None]
    w = np.exp(at.y + 1j * k)[None, :]
    P = np.zeros((N, N), dtype=complex)
    for (i, j), c in p.coeffs.items():
        P += c * z ** i * w ** j
    if np.min(np.abs(P)) == 0.0:
        raise NumericalError("quadrature contour hits a zero of P exactly")
    table = np.fft.ifft2(1.0 / P)
    xs = np.arange(max_dist + 2)
    phase = np.exp(1j * np.pi * xs / N)
    # contour-scaled coefficients (z, w measured in units of the contour radii);
    # these carry the decay of correlations under mu_{s,t}
    ray = np.real(phase * table[xs % N, 0])
    diffs = ray[:-1] - ray[1:]
    dists = np.arange(max_dist // 2, max_dist + 1)
    env = np.array([np.abs(diffs[max(0, d - 2):d + 3]).max() for d in dists])
    floor = 1e-13 * max(np.abs(ray).max(), 1e-300)
    if env.max() < floor:
        return DecayReport("exponential", float("inf"), 1.0, 0.0,
                           tuple(int(d) for d in dists), tuple(env), (at.x, at.y))
    env = np.maximum(env, 1e-300)
    slope_pow, r2_pow = _linear_fit(np.log(dists.astype(float)), np.log(env))
    slope_exp, r2_exp = _linear_fit(dists.astype(float), np.log(env))
    if r2_pow >= r2_exp:
        return DecayReport("quadratic", -slope_pow, r2_pow, r2_exp,
                           tuple(int(d) for d in dists), tuple(float(e) for e in env),
                           (at.x, at.y))
    return DecayReport("exponential", -slope_exp, r2_exp, r2_pow,
                       tuple(int(d) for d in dists), tuple(float(e) for e in env),
                       (at.x, at.y))

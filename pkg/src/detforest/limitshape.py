"""Discrete variational solver for limit shapes of orientable foliations.

The surface-tension functional sum_T area(T) sigma(grad h|_T) is minimized
over piecewise-linear height functions on a triangulated domain with fixed
boundary values, the gradient constrained to the Newton polygon.  sigma
comes from a sampled table with piecewise-linear interpolation; a small
quadratic regularizer restores the strict convexity that the sampled table
loses inside its cells, so the minimizer is unique and affine data yield
affine solutions.  Leaves of the foliation are level curves of the height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, NumericalError, ValidationError
from .laurent import LaurentPoly2, NewtonPolygon, newton_polygon
from .spectral import surface_tension


@dataclass(frozen=True)
class TensionTable:
    polygon: NewtonPolygon
    s_nodes: np.ndarray
    t_nodes: np.ndarray
    values: np.ndarray  # convex sigma samples; a finite wall outside the polygon
    inside: np.ndarray  # mask of nodes inside the polygon
    feasible: NewtonPolygon  # polygon shrunk so solver gradients stay off the wall

    def __call__(self, s, t):
        return self.interpolate(s, t)

    def interpolate(self, s, t):
        """Piecewise-linear value on the triangulated grid (lower-left split)."""
        sn, tn = self.s_nodes, self.t_nodes
        if not (sn[0] <= s <= sn[-1] and tn[0] <= t <= tn[-1]):
            return float(np.max(self.values))
        hs = sn[1] - sn[0]
        ht = tn[1] - tn[0]
        i = min(int((s - sn[0]) / hs), len(sn) - 2)
        j = min(int((t - tn[0]) / ht), len(tn) - 2)
        fs = (s - sn[i]) / hs
        ft = (t - tn[j]) / ht
        v00, v10 = self.values[i, j], self.values[i + 1, j]
        v01, v11 = self.values[i, j + 1], self.values[i + 1, j + 1]
        if fs + ft <= 1.0:
            val = v00 + fs * (v10 - v00) + ft * (v01 - v00)
        else:
            val = v11 + (1 - fs) * (v01 - v11) + (1 - ft) * (v10 - v11)
        return float(val)

    def convexity_violations(self, tol=1e-6):
        """Midpoint convexity violations along grid rows/columns inside the
        polygon (the wall extension outside is deliberately not convex)."""
        bad = []
        v, ins = self.values, self.inside
        for i in range(1, v.shape[0] - 1):
            for j in range(v.shape[1]):
                if ins[i - 1, j] and ins[i, j] and ins[i + 1, j]:
                    if v[i, j] > (v[i - 1, j] + v[i + 1, j]) / 2 + tol:
                        bad.append(("s", i, j))
        for i in range(v.shape[0]):
            for j in range(1, v.shape[1] - 1):
                if ins[i, j - 1] and ins[i, j] and ins[i, j + 1]:
                    if v[i, j] > (v[i, j - 1] + v[i, j + 1]) / 2 + tol:
                        bad.append(("t", i, j))
        return bad


def build_tension_table(p: LaurentPoly2, resolution: int, tol=1e-7) -> TensionTable:
    """Sample the convex surface tension over the Newton polygon.

    The dual values from spectral.surface_tension are per-slope free
    energies (a pointwise minimum of affine functions, hence cap-shaped);
    the variational solver needs their convex negation, which is what the
    table stores: 0 at polygon vertices, most negative at the center.
    Nodes outside the polygon hold a large finite wall so that stray
    interpolation weights stay harmless; the solver's feasibility polygon
    is shrunk so optimal gradients never rest on wall cells.  Convexity
    violations are reported by convexity_violations, never smoothed away.
    """
    if resolution < 4:
        raise ValidationError("resolution must be >= 4")
    polygon = newton_polygon(p)
    (slo, shi), (tlo, thi) = polygon.bounding_box()
    s_nodes = np.linspace(slo, shi, resolution + 1)
    t_nodes = np.linspace(tlo, thi, resolution + 1)
    values = np.full((resolution + 1, resolution + 1), np.nan)
    inside = np.zeros_like(values, dtype=bool)
    failures = []
    for i, s in enumerate(s_nodes):
        for j, t in enumerate(t_nodes):
            if not polygon.contains(s, t, tol=1e-9):
                continue
            inside[i, j] = True
            try:
                values[i, j] = -surface_tension(p, s, t, tol=tol, N=2048).sigma
            except (ValidationError, NumericalError) as exc:
                failures.append(((float(s), float(t)), str(exc)))
    if failures:
        raise NumericalError(f"surface tension failed at {[f[0] for f in failures]}")
    finite = values[inside]
    wall = float(finite.max() + 10.0 * (finite.max() - finite.min() + 1.0))
    values[~inside] = wall
    shrink = 1.0 - 2.0 / resolution
    return TensionTable(polygon, s_nodes, t_nodes, values, inside, polygon.scaled(shrink))


# ---------------------------------------------------------------------------
# height fields


@dataclass(frozen=True)
class HeightField:
    points: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (m, 3) int
    is_boundary: np.ndarray  # (n,) bool
    values: np.ndarray  # (n,)

    def gradient(self, tri_index):
        i0, i1, i2 = self.triangles[tri_index]
        p0, p1, p2 = self.points[i0], self.points[i1], self.points[i2]
        A = np.array([p1 - p0, p2 - p0])
        rhs = np.array([self.values[i1] - self.values[i0], self.values[i2] - self.values[i0]])
        return np.linalg.solve(A, rhs)

    def areas(self):
        p = self.points[self.triangles]
        cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - \
                (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        return 0.5 * np.abs(cross)


def rectangle_mesh(nx: int, ny: int, width=1.0, height=1.0) -> HeightField:
    """Structured right-triangle mesh on [0, width] x [0, height], zero heights."""
    xs = np.linspace(0.0, width, nx + 1)
    ys = np.linspace(0.0, height, ny + 1)
    pts = np.array([[x, y] for y in ys for x in xs])
    tris = []
    for j in range(ny):
        for i in range(nx):
            v00 = j * (nx + 1) + i
            v10, v01, v11 = v00 + 1, v00 + nx + 1, v00 + nx + 2
            tris.append([v00, v10, v11])
            tris.append([v00, v11, v01])
    boundary = np.array(
        [x in (0.0, width) or y in (0.0, height) for (x, y) in pts]
    )
    return HeightField(pts, np.array(tris, dtype=int), boundary, np.zeros(len(pts)))


def support_function(polygon: NewtonPolygon, dx, dy):
    return max(vx * dx + vy * dy for (vx, vy) in polygon.vertices)


def check_boundary_feasible(field: HeightField, polygon: NewtonPolygon, tol=1e-9):
    """Lipschitz compatibility of boundary data with the gradient polygon."""
    idx = np.where(field.is_boundary)[0]
    for a in idx:
        for b in idx:
            if a >= b:
                continue
            dx, dy = field.points[b] - field.points[a]
            bound = support_function(polygon, dx, dy)
            if field.values[b] - field.values[a] > bound + tol:
                raise ValidationError(
                    f"boundary pair {a}, {b} violates the Lipschitz bound "
                    f"({field.values[b] - field.values[a]:.6g} > {bound:.6g})"
                )


def mcshane_extension(field: HeightField, polygon: NewtonPolygon) -> HeightField:
    """Pointwise-largest Lipschitz extension of the boundary data."""
    idx = np.where(field.is_boundary)[0]
    vals = field.values.copy()
    for v in range(len(vals)):
        if field.is_boundary[v]:
            continue
        vals[v] = min(
            field.values[b] + support_function(polygon, *(field.points[v] - field.points[b]))
            for b in idx
        )
    return replace(field, values=vals)


def _feasible_interval(tris_of_v, coeffs, grads, halfplanes, margin=0.0):
    """Range of the height step keeping every incident gradient in the polygon."""
    lo, hi = -math.inf, math.inf
    for tt, a in zip(tris_of_v, coeffs):
        g = grads[tt]
        for (n, b) in halfplanes:
            na = n[0] * a[0] + n[1] * a[1]
            slack = b + margin - (n[0] * g[0] + n[1] * g[1])
            if abs(na) < 1e-14:
                if slack < -1e-12:
                    return 0.0, -1.0  # empty
                continue
            step = slack / na
            if na > 0:
                hi = min(hi, step)
            else:
                lo = max(lo, step)
    return lo, hi


def _violation_terms(tris_of_v, coeffs, grads, halfplanes):
    """Linear forms alpha*delta + beta whose positive parts square to the
    infeasibility of the incident gradients as the vertex height moves."""
    terms = []
    const = 0.0
    for tt, a in zip(tris_of_v, coeffs):
        g = grads[tt]
        for (n, b) in halfplanes:
            alpha = n[0] * a[0] + n[1] * a[1]
            beta = n[0] * g[0] + n[1] * g[1] - b
            if abs(alpha) > 1e-14:
                terms.append((alpha, beta))
            elif beta > 0:
                const += beta * beta
    return terms, const


def _violation_value(terms, const, delta):
    tot = const
    for a, b in terms:
        e = a * delta + b
        if e > 0:
            tot += e * e
    return tot


def _violation_min_step(terms):
    """Exact minimizer of the convex piecewise-quadratic sum max(0, a d + b)^2."""
    if not terms:
        return 0.0
    bps = sorted(-b / a for a, b in terms)

    def deriv(d):
        return sum(2 * a * (a * d + b) for a, b in terms if a * d + b > 0)

    lo, hi = bps[0], bps[-1]
    if deriv(lo) >= 0:
        probe = lo - 1.0
    elif deriv(hi) <= 0:
        probe = hi + 1.0
    else:
        ilo, ihi = 0, len(bps) - 1
        while ihi - ilo > 1:
            mid = (ilo + ihi) // 2
            if deriv(bps[mid]) < 0:
                ilo = mid
            else:
                ihi = mid
        probe = (bps[ilo] + bps[ihi]) / 2
    active = [(a, b) for a, b in terms if a * probe + b > 0]
    A = 2 * sum(a * a for a, _ in active)
    B = 2 * sum(a * b for a, b in active)
    if A == 0:  # flat zero piece; any point of it works
        return probe
    return -B / A


def minimize_height(field: HeightField, table: TensionTable, tol=1e-7,
                    max_sweeps=2000, regularizer=3e-4) -> tuple:
    """Projected coordinate descent on the discrete surface-tension energy.

    Returns (HeightField, info) where info carries the energy trace.  The
    energy is sum_T area(T) [sigma(grad h_T) + regularizer |grad h_T|^2];
    each interior height is line-searched over the interval keeping all
    incident gradients inside the feasible polygon.  Energy never
    increases; sweeps stop when no height moves more than tol.
    """
    field = replace(field, values=field.values.copy())
    check_boundary_feasible(field, table.feasible)
    polygon = table.feasible
    halfplanes = polygon.edge_halfplanes()
    n = len(field.values)
    areas = field.areas()
    tri_pts = field.points[field.triangles]

    # gradient of triangle t is sum_k coeff[t, k] * h[tri[t, k]] (2-vectors)
    coeff = np.zeros((len(field.triangles), 3, 2))
    for t, (i0, i1, i2) in enumerate(field.triangles):
        A = np.array([tri_pts[t, 1] - tri_pts[t, 0], tri_pts[t, 2] - tri_pts[t, 0]])
        Ainv = np.linalg.inv(A)
        coeff[t, 1] = Ainv @ np.array([1.0, 0.0])
        coeff[t, 2] = Ainv @ np.array([0.0, 1.0])
        coeff[t, 0] = -coeff[t, 1] - coeff[t, 2]

    tris_of = [[] for _ in range(n)]
    pos_of = [[] for _ in range(n)]
    for t, tri in enumerate(field.triangles):
        for k, v in enumerate(tri):
            tris_of[v].append(t)
            pos_of[v].append(k)

    h = field.values
    grads = np.einsum("tkd,tk->td", coeff, h[field.triangles])

    def tri_energy(t, g):
        sig = table.interpolate(g[0], g[1])
        return areas[t] * (sig + regularizer * (g[0] ** 2 + g[1] ** 2))

    def total_energy():
        return sum(tri_energy(t, grads[t]) for t in range(len(field.triangles)))

    # feasible start: coordinate descent on the smooth convex infeasibility
    # (sum of squared halfplane excesses); it is zero exactly on the feasible
    # set, which the boundary check above guarantees to be nonempty
    interior = [v for v in range(n) if not field.is_boundary[v]]

    def repair():
        total = math.inf
        for _ in range(400):
            total = 0.0
            for v in interior:
                cvecs = [coeff[t, k] for t, k in zip(tris_of[v], pos_of[v])]
                terms, const = _violation_terms(tris_of[v], cvecs, grads, halfplanes)
                f0 = _violation_value(terms, const, 0.0)
                if f0 <= 1e-24:
                    continue
                total += f0
                delta = _violation_min_step(terms)
                if delta != 0.0 and _violation_value(terms, const, delta) < f0:
                    h[v] += delta
                    for t, k in zip(tris_of[v], pos_of[v]):
                        grads[t] += coeff[t, k] * delta
            if total < 1e-20:
                return True
        return total < 1e-14

    if not repair():
        mc = mcshane_extension(replace(field, values=h), polygon)
        h[:] = mc.values
        grads[:] = np.einsum("tkd,tk->td", coeff, h[field.triangles])
        if not repair():
            raise ConvergenceError("feasibility projection did not settle")

    energies = [total_energy()]
    if not math.isfinite(energies[0]):
        raise ValidationError("initial heights are infeasible for the tension table")
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    for sweep in range(max_sweeps):
        biggest = 0.0
        for v in interior:
            cvecs = [coeff[t, k] for t, k in zip(tris_of[v], pos_of[v])]
            lo, hi = _feasible_interval(tris_of[v], cvecs, grads, halfplanes, margin=1e-9)
            if lo > hi:
                continue

            def local(delta):
                tot = 0.0
                for t, k in zip(tris_of[v], pos_of[v]):
                    g = grads[t] + coeff[t, k] * delta
                    tot += tri_energy(t, g)
                return tot

            a, b = lo, hi
            c = b - invphi * (b - a)
            d = a + invphi * (b - a)
            fc, fd = local(c), local(d)
            while b - a > tol / 64:
                if fc <= fd:
                    b, d, fd = d, c, fc
                    c = b - invphi * (b - a)
                    fc = local(c)
                else:
                    a, c, fc = c, d, fd
                    d = a + invphi * (b - a)
                    fd = local(d)
            delta = (a + b) / 2
            if local(delta) < local(0.0):  # strict, so kink ties cannot ping-pong
                h[v] += delta
                for t, k in zip(tris_of[v], pos_of[v]):
                    grads[t] += coeff[t, k] * delta
                biggest = max(biggest, abs(delta))
        energies.append(total_energy())
        if energies[-1] > energies[-2] + 1e-9 * max(1.0, abs(energies[-2])):
            raise NumericalError("energy increased during a sweep")
        # the sweep-to-sweep contraction leaves a tail ~ move/(1 - rho); the
        # 1/16 factor absorbs it so the heights land within ~tol of the fix point
        if biggest < tol / 16:
            break
        if (sweep >= 10 and biggest < tol / 2
                and energies[-11] - energies[-1] < 1e-14 * max(1.0, abs(energies[-1]))):
            break  # movement is kink chatter without energy progress
    else:
        raise ConvergenceError(f"coordinate descent did not converge in {max_sweeps} sweeps")
    info = {"energies": energies, "sweeps": sweep + 1}
    return replace(field, values=h), info


# ---------------------------------------------------------------------------
# level curves


def extract_leaves(field: HeightField, spacing: float):
    """Level curves of the height at multiples of `spacing`, as polylines.

    Marching-triangle segments are chained greedily by shared endpoints.
    A constant field has no leaves.
    """
    if spacing <= 0:
        raise ValidationError("spacing must be positive")
    h = field.values
    hmin, hmax = float(h.min()), float(h.max())
    leaves = []
    lev = math.ceil(hmin / spacing) * spacing
    while lev <= hmax:
        segs = _level_segments(field, lev)
        leaves.extend(_chain_segments(segs))
        lev += spacing
    return leaves


def _level_segments(field, level):
    segs = []
    for (i0, i1, i2) in field.triangles:
        pts = []
        for a, b in ((i0, i1), (i1, i2), (i2, i0)):
            ha, hb = field.values[a], field.values[b]
            if (ha - level) * (hb - level) < 0:
                t = (level - ha) / (hb - ha)
                pts.append(tuple(field.points[a] + t * (field.points[b] - field.points[a])))
            elif ha == level and hb != level:
                pts.append(tuple(field.points[a]))
            elif hb == level and ha != level:
                pts.append(tuple(field.points[b]))
        uniq = []
        for p in pts:
            if not any(abs(p[0] - q[0]) + abs(p[1] - q[1]) < 1e-12 for q in uniq):
                uniq.append(p)
        if len(uniq) == 2:
            segs.append((uniq[0], uniq[1]))
    return segs


def _chain_segments(segs, tol=1e-9):
    chains = []
    remaining = list(segs)
    while remaining:
        a, b = remaining.pop()
        chain = [a, b]
        grew = True
        while grew:
            grew = False
            for k, (c, d) in enumerate(remaining):
                if _close(chain[-1], c, tol):
                    chain.append(d)
                elif _close(chain[-1], d, tol):
                    chain.append(c)
                elif _close(chain[0], c, tol):
                    chain.insert(0, d)
                elif _close(chain[0], d, tol):
                    chain.insert(0, c)
                else:
                    continue
                remaining.pop(k)
                grew = True
                break
        chains.append(chain)
    return chains


def _close(p, q, tol):
    return abs(p[0] - q[0]) + abs(p[1] - q[1]) < tol

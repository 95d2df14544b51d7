"""Laurent polynomials in one and two variables, with complex coefficients.

Polynomials are stored sparsely as exponent -> coefficient maps and are
normalized on construction: coefficients smaller than ``PRUNE_REL`` times
the largest magnitude are dropped.  The module also provides grid
interpolation (inverse DFT on scaled roots of unity), Newton polygons of
two-variable polynomials, and the linear basis change between powers of
``(2 - X - 1/X)`` and the symmetric powers ``X^j + X^{-j}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InterpolationError, ValidationError

PRUNE_REL = 1e-12


def _prune(coeffs, rel_tol):
    if not coeffs:
        return {}
    top = max(abs(c) for c in coeffs.values())
    if top == 0.0:
        return {}
    return {e: complex(c) for e, c in coeffs.items() if abs(c) > rel_tol * top}


@dataclass(frozen=True)
class LaurentPoly1:
    """One-variable Laurent polynomial sum_k coeffs[k] * z^k."""

    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _prune(dict(self.coeffs), PRUNE_REL))

    @property
    def degree_lo(self):
        return min(self.coeffs) if self.coeffs else 0

    @property
    def degree_hi(self):
        return max(self.coeffs) if self.coeffs else 0

    def __call__(self, z):
        return eval_poly(self, z)

    def is_reciprocal(self, tol=1e-10):
        """True if coeffs[k] == coeffs[-k] for all k, within tol (relative)."""
        if not self.coeffs:
            return True
        top = max(abs(c) for c in self.coeffs.values())
        return all(
            abs(c - self.coeffs.get(-e, 0.0)) <= tol * top for e, c in self.coeffs.items()
        )

    def to_json(self):
        terms = [
            {"e": [int(e)], "re": float(c.real), "im": float(c.imag)}
            for e, c in sorted(self.coeffs.items())
        ]
        return {"var": 1, "terms": terms}


@dataclass(frozen=True)
class LaurentPoly2:
    """Two-variable Laurent polynomial sum_{i,j} coeffs[i,j] * z^i w^j."""

    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _prune(dict(self.coeffs), PRUNE_REL))

    def __call__(self, z, w):
        return eval_poly(self, z, w)

    def is_reciprocal(self, tol=1e-10):
        if not self.coeffs:
            return True
        top = max(abs(c) for c in self.coeffs.values())
        return all(
            abs(c - self.coeffs.get((-i, -j), 0.0)) <= tol * top
            for (i, j), c in self.coeffs.items()
        )

    def w_profile(self):
        """Coefficients grouped by w-exponent: {j: LaurentPoly1 in z}."""
        rows = {}
        for (i, j), c in self.coeffs.items():
            rows.setdefault(j, {})[i] = c
        return {j: LaurentPoly1(r) for j, r in sorted(rows.items())}

    def swap_vars(self):
        return LaurentPoly2({(j, i): c for (i, j), c in self.coeffs.items()})

    def to_json(self):
        terms = [
            {"e": [int(i), int(j)], "re": float(c.real), "im": float(c.imag)}
            for (i, j), c in sorted(self.coeffs.items())
        ]
        return {"var": 2, "terms": terms}


def poly_from_json(doc):
    if doc.get("var") == 1:
        return LaurentPoly1({t["e"][0]: t["re"] + 1j * t.get("im", 0.0) for t in doc["terms"]})
    if doc.get("var") == 2:
        return LaurentPoly2(
            {tuple(t["e"]): t["re"] + 1j * t.get("im", 0.0) for t in doc["terms"]}
        )
    raise ValidationError("polynomial JSON must have var = 1 or 2")


def _horner_1d(coeffs, z):
    """Horner evaluation of a sparse exponent map at z (dense over the span)."""
    lo, hi = min(coeffs), max(coeffs)
    acc = 0.0 + 0.0j
    for e in range(hi, lo - 1, -1):
        acc = acc * z + coeffs.get(e, 0.0)
    return acc * z ** lo


def eval_poly(p, z, w=None):
    """Evaluate p at z (and w for two-variable polynomials).

    Horner-style in each variable.  Zero coordinates are rejected since
    negative exponents are allowed.
    """
    if isinstance(p, LaurentPoly1):
        if z == 0:
            raise ValidationError("cannot evaluate Laurent polynomial at z = 0")
        if not p.coeffs:
            return 0.0 + 0.0j
        return _horner_1d(p.coeffs, complex(z))
    if w is None:
        raise ValidationError("two-variable polynomial needs both z and w")
    if z == 0 or w == 0:
        raise ValidationError("cannot evaluate Laurent polynomial at a zero coordinate")
    if not p.coeffs:
        return 0.0 + 0.0j
    by_i = {}
    for (i, j), c in p.coeffs.items():
        by_i.setdefault(i, {})[j] = c
    ilo, ihi = min(by_i), max(by_i)
    acc = 0.0 + 0.0j
    z = complex(z)
    for i in range(ihi, ilo - 1, -1):
        inner = _horner_1d(by_i[i], complex(w)) if i in by_i else 0.0
        acc = acc * z + inner
    return acc * z ** ilo


def _exponent_for_freq(m, n, lo, hi):
    # unique exponent e in [lo, hi] with e == m (mod n), or None
    e = lo + (m - lo) % n
    return e if e <= hi else None


def interpolate_from_grid(values, radius, bounds, rtol=1e-9):
    """Recover the Laurent polynomial matching evaluations on scaled roots of unity.

    ``values`` holds p(r * omega^k) for omega = exp(2 pi i / n) (1d array),
    or p(r1 * omega1^k, r2 * omega2^l) on a product grid (2d array).
    ``bounds`` is (lo, hi) or ((lo1, hi1), (lo2, hi2)).  The grid must be
    strictly larger than the exponent span.  The result is re-evaluated on
    the grid; a relative residual above ``rtol`` raises InterpolationError.
    """
    values = np.asarray(values, dtype=complex)
    if not np.all(np.isfinite(values)):
        raise ValidationError("interpolation values must be finite")
    if values.ndim == 1:
        (lo, hi) = bounds
        n = values.shape[0]
        if n < hi - lo + 1:
            raise ValidationError(
                f"need more than {hi - lo} grid points for exponents [{lo}, {hi}], got {n}"
            )
        r = float(radius)
        g = np.fft.fft(values) / n  # fft index m carries the coefficient of z^m
        coeffs = {}
        for m in range(n):
            e = _exponent_for_freq(m, n, lo, hi)
            if e is not None:
                coeffs[e] = g[m] / r ** e
        poly = LaurentPoly1(coeffs)
        grid = r * np.exp(2j * np.pi * np.arange(n) / n)
        resid = np.array([poly(zk) for zk in grid]) - values
    elif values.ndim == 2:
        (lo1, hi1), (lo2, hi2) = bounds
        n1, n2 = values.shape
        if n1 < hi1 - lo1 + 1 or n2 < hi2 - lo2 + 1:
            raise ValidationError("interpolation grid smaller than exponent span")
        r1, r2 = (radius, radius) if np.isscalar(radius) else radius
        g = np.fft.fft2(values) / (n1 * n2)
        coeffs = {}
        for m1 in range(n1):
            e1 = _exponent_for_freq(m1, n1, lo1, hi1)
            if e1 is None:
                continue
            for m2 in range(n2):
                e2 = _exponent_for_freq(m2, n2, lo2, hi2)
                if e2 is None:
                    continue
                coeffs[(e1, e2)] = g[m1, m2] / (r1 ** e1 * r2 ** e2)
        poly = LaurentPoly2(coeffs)
        z = r1 * np.exp(2j * np.pi * np.arange(n1) / n1)
        w = r2 * np.exp(2j * np.pi * np.arange(n2) / n2)
        resid = (
            np.array([[poly(zk, wl) for wl in w] for zk in z]) - values
        )
    else:
        raise ValidationError("values must be a 1d or 2d array")
    scale = max(np.max(np.abs(values)), 1.0)
    worst = float(np.max(np.abs(resid)) / scale)
    if worst > rtol:
        raise InterpolationError(
            f"interpolation residual {worst:.3e} exceeds {rtol:.1e}; "
            "widen the exponent bounds or change the radius",
            residual=worst,
        )
    return poly


@dataclass(frozen=True)
class NewtonPolygon:
    """Convex hull of exponent support, vertices counterclockwise."""

    vertices: tuple

    def contains(self, s, t, tol=1e-9):
        pts = self.vertices
        if len(pts) == 1:
            return abs(s - pts[0][0]) <= tol and abs(t - pts[0][1]) <= tol
        if len(pts) == 2:
            (x0, y0), (x1, y1) = pts
            cross = (x1 - x0) * (t - y0) - (y1 - y0) * (s - x0)
            dot = (s - x0) * (x1 - x0) + (t - y0) * (y1 - y0)
            ll = (x1 - x0) ** 2 + (y1 - y0) ** 2
            return abs(cross) <= tol * max(1.0, math.sqrt(ll)) and -tol <= dot <= ll + tol
        for k in range(len(pts)):
            x0, y0 = pts[k]
            x1, y1 = pts[(k + 1) % len(pts)]
            if (x1 - x0) * (t - y0) - (y1 - y0) * (s - x0) < -tol:
                return False
        return True

    def interior_contains(self, s, t, margin=1e-9):
        pts = self.vertices
        if len(pts) < 3:
            return False
        for k in range(len(pts)):
            x0, y0 = pts[k]
            x1, y1 = pts[(k + 1) % len(pts)]
            edge = math.hypot(x1 - x0, y1 - y0)
            if (x1 - x0) * (t - y0) - (y1 - y0) * (s - x0) <= margin * edge:
                return False
        return True

    def is_centrally_symmetric(self):
        vs = set(self.vertices)
        return all((-x, -y) in vs for (x, y) in vs)

    def bounding_box(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), max(xs)), (min(ys), max(ys))

    def scaled(self, factor):
        """Polygon shrunk/expanded about the origin (vertices become floats)."""
        return NewtonPolygon(tuple((x * factor, y * factor) for (x, y) in self.vertices))

    def edge_halfplanes(self):
        """(normal, offset) pairs with n . p <= b for all polygon points p."""
        pts = self.vertices
        out = []
        if len(pts) == 1:
            (x0, y0) = pts[0]
            out.append(((1.0, 0.0), x0))
            out.append(((-1.0, 0.0), -x0))
            out.append(((0.0, 1.0), y0))
            out.append(((0.0, -1.0), -y0))
            return out
        if len(pts) == 2:
            (x0, y0), (x1, y1) = pts
            dx, dy = x1 - x0, y1 - y0
            ll = math.hypot(dx, dy)
            nx, ny = -dy / ll, dx / ll
            out.append(((nx, ny), nx * x0 + ny * y0))
            out.append(((-nx, -ny), -(nx * x0 + ny * y0)))
            out.append(((dx / ll, dy / ll), (dx * x1 + dy * y1) / ll))
            out.append(((-dx / ll, -dy / ll), -(dx * x0 + dy * y0) / ll))
            return out
        for k in range(len(pts)):
            x0, y0 = pts[k]
            x1, y1 = pts[(k + 1) % len(pts)]
            dx, dy = x1 - x0, y1 - y0
            ll = math.hypot(dx, dy)
            nx, ny = dy / ll, -dx / ll  # outward for CCW order
            out.append(((nx, ny), nx * x0 + ny * y0))
        return out


def _hull(points):
    """Andrew monotone chain; returns CCW vertices starting at the lexicographic min."""
    pts = sorted(set(points))
    if len(pts) == 1:
        return tuple(pts)

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2 and (
                (out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])
            ) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(list(reversed(pts)))
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 0:  # all collinear
        return (pts[0], pts[-1])
    return tuple(hull)


def newton_polygon(p: LaurentPoly2) -> NewtonPolygon:
    """Convex hull of the exponent support of p."""
    if not p.coeffs:
        raise ValidationError("newton_polygon of the zero polynomial")
    return NewtonPolygon(_hull(list(p.coeffs.keys())))


def basis_change(C):
    """Map coefficients of powers of U = (2 - X - 1/X) to symmetric-power coefficients.

    Given C[0..m-1] standing for C_1..C_m in sum_{k=1}^m C_k U^k, returns
    D[0..m] with

        sum_k C_k U^k = D_0 + sum_{j>=1} D_j (X^j + X^{-j}),

    D_j = (-1)^j sum_{k=j}^m C_k binom(2k, k-j).  The j = 0 coefficient is
    the constant term counted once.  Integer inputs stay exact.
    """
    m = len(C)
    if m < 1:
        raise ValidationError("basis_change needs at least one coefficient")
    D = []
    for j in range(m + 1):
        s = 0
        for k in range(max(j, 1), m + 1):
            s += C[k - 1] * math.comb(2 * k, k - j)
        D.append((-1) ** j * s if j % 2 else s)
    return D


def u_power_coeffs(j):
    """Exponent map of (2 - X - 1/X)^j."""
    poly = {0: 1}
    base = {-1: -1, 0: 2, 1: -1}
    for _ in range(j):
        new = {}
        for a, va in poly.items():
            for b, vb in base.items():
                new[a + b] = new.get(a + b, 0) + va * vb
        poly = new
    return poly


def u_expansion(p: LaurentPoly1, tol=1e-7):
    """Write a reciprocal Laurent polynomial as sum_{j=0}^m N_j (2 - z - 1/z)^j.

    Returns the list [N_0, ..., N_m].  Peels from the top degree down; a
    residual that is not constant (beyond tol relative) raises.
    """
    if not p.coeffs:
        return [0.0]
    if not p.is_reciprocal(tol=1e-8):
        raise ValidationError("u_expansion requires a reciprocal polynomial")
    m = p.degree_hi
    c = {e: complex(v) for e, v in p.coeffs.items()}
    scale = max(abs(v) for v in c.values())
    out = [0.0] * (m + 1)
    for j in range(m, 0, -1):
        nj = c.get(j, 0.0) * (-1) ** j
        out[j] = nj.real
        for a, va in u_power_coeffs(j).items():
            c[a] = c.get(a, 0.0) - nj * va
    for e, v in c.items():
        if e != 0 and abs(v) > tol * scale:
            raise ValidationError(f"u_expansion residual {abs(v):.2e} at exponent {e}")
    out[0] = c.get(0, 0.0).real
    return out

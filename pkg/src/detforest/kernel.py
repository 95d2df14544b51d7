"""Transfer-current matrices and contour-integral determinantal kernels.

The pointwise kernel K(z, w) = C d(z, w) (Delta + D_M)^{-1} d(1/z, 1/w)^T is
indexed by fundamental-domain edges in canonical file order.  Strip kernels
integrate K(u) u^{x1 - x2} over a circle between consecutive roots of P;
torus kernels integrate over the torus through a surface-tension argmin.
Contour integrals use the trapezoid rule (spectrally convergent for the
analytic integrands here) with node doubling until two successive
estimates agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, KernelError, NumericalError, ValidationError
from .graph import PeriodicGraph
from .laplacian import char_poly, conductance_diag, d_matrix, delta_matrix
from .spectral import SpectralReport, strip_roots, surface_tension

IMAG_RESIDUE_TOL = 1e-7


@dataclass(frozen=True)
class KernelMatrix:
    entries: np.ndarray
    provenance: dict

    @property
    def size(self):
        return self.entries.shape[0]


def transfer_current(g: PeriodicGraph, z, w=1.0) -> KernelMatrix:
    """K(z, w) = C d (Delta + D_M)^{-1} d*, the edge-indexed kernel at a point."""
    delta = delta_matrix(g, z, w, with_mass=True)
    cond = np.linalg.cond(delta.entries)
    if not np.isfinite(cond) or cond > 1e13:
        raise NumericalError(f"Delta + D_M is numerically singular at (z, w) = ({z}, {w})")
    inv = np.linalg.inv(delta.entries)
    dz = d_matrix(g, z, w)
    dzi = d_matrix(g, 1 / z, 1 / w)
    K = conductance_diag(g)[:, None] * (dz @ inv @ dzi.T)
    return KernelMatrix(K, {"point": (complex(z), complex(w)), "graph_kind": g.kind})


def _entry_batch(g, zs, ws, e1, e2):
    """K(z, w)[e1, e2] over broadcast arrays of evaluation points."""
    zs, ws = np.broadcast_arrays(np.asarray(zs, dtype=complex), np.asarray(ws, dtype=complex))
    shape = zs.shape
    zf, wf = zs.ravel(), ws.ravel()
    nv = len(g.vertices)
    idx = g.vertex_index
    D = np.zeros((zf.size, nv, nv), dtype=complex)
    for e in g.edges:
        iu, iv = idx[e.u], idx[e.v]
        ph = zf ** e.dx * wf ** e.dy
        D[:, iu, iu] += e.c
        D[:, iv, iv] += e.c
        D[:, iu, iv] -= e.c * ph
        D[:, iv, iu] -= e.c / ph
    for v in g.vertices:
        D[:, idx[v], idx[v]] += g.mass[v]
    try:
        inv = np.linalg.inv(D)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Delta + D_M singular on the quadrature grid") from exc
    ea, eb = g.edges[e1], g.edges[e2]
    row = np.zeros((zf.size, nv), dtype=complex)
    row[:, idx[ea.u]] += -1.0
    row[:, idx[ea.v]] += zf ** ea.dx * wf ** ea.dy
    col = np.zeros((zf.size, nv), dtype=complex)
    col[:, idx[eb.u]] += -1.0
    col[:, idx[eb.v]] += zf ** (-eb.dx) * wf ** (-eb.dy)
    vals = ea.c * np.einsum("pa,pab,pb->p", row, inv, col)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("kernel integrand overflowed (contour through a zero of P?)")
    return vals.reshape(shape)


def tree_kernel(g: PeriodicGraph, root=None) -> KernelMatrix:
    """Spanning-tree transfer current of a finite graph (trivial offsets).

    Grounds one vertex so the Laplacian block is invertible; the resulting
    projection kernel is independent of the grounding choice.
    """
    if any(e.dx or e.dy for e in g.edges):
        raise ValidationError("tree_kernel expects a finite graph with zero offsets")
    idx = g.vertex_index
    r = idx[root] if root is not None else 0
    keep = [i for i in range(len(g.vertices)) if i != r]
    dz = d_matrix(g, 1.0, 1.0)[:, keep]
    lap = dz.T @ (conductance_diag(g)[:, None] * dz)
    K = conductance_diag(g)[:, None] * (dz @ np.linalg.inv(lap) @ dz.T)
    return KernelMatrix(K, {"tree_kernel": True, "root": r})


def _strip_report(g) -> SpectralReport:
    return strip_roots(char_poly(g), massive=g.is_massive())


def default_radius(report: SpectralReport, j: int) -> float:
    """A circle radius strictly inside the j-th root gap."""
    top = report.top_roots()
    if j == report.m:
        return top[-1] * 1.5
    if j == 0:
        return 1.0  # massive case: the gap (1/lambda_1, lambda_1) contains the unit circle
    return float(np.sqrt(top[j - 1] * top[j]))


def strip_kernel_entry(g: PeriodicGraph, j: int, e1: int, e2: int, x1=0, x2=0,
                       radius=None, report=None, rtol=1e-8, n0=64, nmax=1 << 14) -> float:
    """Entry of the kernel of mu_j between copies of e1 and e2 in columns x1, x2.

    Integrates K(u)[e1, e2] u^{x1 - x2} du / (2 pi i u) over a circle with
    lambda_j < r < lambda_{j+1}; the measures for different j differ only
    through this contour.  The result must be real up to a small residue.
    """
    if g.kind != "strip":
        raise ValidationError("strip_kernel_entry needs a strip graph")
    report = report or _strip_report(g)
    m = report.m
    jlo = 0 if report.massive else 1
    if not jlo <= j <= m:
        raise ValidationError(f"component count j must be in [{jlo}, {m}]")
    top = report.top_roots()
    if radius is None:
        radius = default_radius(report, j)
    in_gap = (
        (j == m and radius > top[-1])
        or (j == 0 and 1.0 / top[0] < radius < top[0])
        or (0 < j < m and top[j - 1] < radius < top[j])
    )
    if not in_gap:
        raise ValidationError(f"radius {radius} is not inside the root gap for j={j}")
    if any(abs(radius - lam) < 1e-9 * max(lam, 1.0) for lam in report.roots):
        raise ValidationError(f"radius {radius} collides with a root of P")

    prev = None
    n = n0
    while n <= nmax:
        us = radius * np.exp(2j * np.pi * np.arange(n) / n)
        vals = _entry_batch(g, us, np.ones_like(us), e1, e2) * us ** (x1 - x2)
        cur = complex(vals.mean())
        if prev is not None and abs(cur - prev) < rtol:
            break
        prev = cur
        n *= 2
    else:
        raise ConvergenceError(f"strip kernel contour integral did not converge by N={nmax}")
    if abs(cur.imag) > IMAG_RESIDUE_TOL:
        raise NumericalError(f"kernel entry has imaginary residue {cur.imag:.3e}")
    return float(cur.real)


def cylinder_kernel(g: PeriodicGraph, n: int, z, e1: int, e2: int, x1=0, x2=0):
    """Kernel entry on the n-fold cylinder cover: exact average over n-th roots.

    K_n(z)[e1, e2] = (1/n) sum_{zeta^n = z} K(zeta)[e1, e2] zeta^{x1 - x2},
    with e1, e2 fundamental-domain edges and x1, x2 column shifts.
    """
    if g.kind != "strip":
        raise ValidationError("cylinder_kernel needs a strip graph")
    if n < 1:
        raise ValidationError("cover size n must be >= 1")
    z = complex(z)
    if z == 0:
        raise ValidationError("z must be nonzero")
    r = abs(z) ** (1.0 / n)
    zetas = r * np.exp(1j * (np.angle(z) + 2 * np.pi * np.arange(n)) / n)
    vals = _entry_batch(g, zetas, np.ones_like(zetas), e1, e2) * zetas ** (x1 - x2)
    return complex(vals.mean())


def torus_kernel_entry(g: PeriodicGraph, s: float, t: float, e1: int, e2: int,
                       shift=(0, 0), rtol=1e-8, n0=64, nmax=4096, at=None) -> float:
    """Entry of the mu_{s,t} kernel between e1 and a copy of e2 shifted by (x, y).

    Double trapezoid quadrature of K(z, w)[e1, e2] z^{-x} w^{-y} on the
    torus through the surface-tension argmin for (s, t); midpoint offsets
    keep the nodes off real zeros of P.  If the contour still meets a zero
    the radii are nudged within the same complement component.
    """
    if g.kind != "torus":
        raise ValidationError("torus_kernel_entry needs a torus graph")
    if at is None:
        at = surface_tension(char_poly(g), s, t)
    x, y = at.x, at.y
    sx, sy = shift
    last_exc = None
    for attempt in range(3):
        try:
            val = _torus_quad(g, x, y, e1, e2, sx, sy, rtol, n0, nmax)
            break
        except NumericalError as exc:
            last_exc = exc
            x += 1e-4 * (attempt + 1)
            y -= 1e-4 * (attempt + 1)
    else:
        raise NumericalError(f"torus kernel quadrature failed: {last_exc}")
    if abs(val.imag) > IMAG_RESIDUE_TOL:
        raise NumericalError(f"kernel entry has imaginary residue {val.imag:.3e}")
    return float(val.real)


def _torus_quad_fixed(g, x, y, e1, e2, sx, sy, n):
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    zs = np.exp(x + 1j * th)
    ws = np.exp(y + 1j * th)
    total = np.zeros((), dtype=complex)
    wfac = ws ** (-sy)
    for zk in zs:  # chunked over z, vectorized over w; fixed summation order
        vals = _entry_batch(g, np.full_like(ws, zk), ws, e1, e2)
        total += np.sum(vals * wfac) * zk ** (-sx)
    return total / (n * n)


def _torus_quad(g, x, y, e1, e2, sx, sy, rtol, n0, nmax):
    # integrands are analytic off the spectral curve and stay bounded at a
    # real node; contours through simple intersections (noninteger slopes)
    # are principal values with slow algebraic convergence and need a large
    # nmax rather than a silently loosened tolerance
    prev = None
    n = n0
    while True:
        cur = _torus_quad_fixed(g, x, y, e1, e2, sx, sy, n)
        if prev is not None and abs(cur - prev) < rtol:
            return cur
        if n >= nmax:
            raise ConvergenceError(
                f"torus kernel quadrature stalled at N={n} (last step {abs(cur - prev):.2e})"
            )
        prev = cur
        n *= 2


def edge_probability(K, include, exclude=()) -> float:
    """Probability that all edges in `include` occur and none in `exclude`.

    det of the corresponding minor of K; mixed events use the
    inclusion-exclusion determinant (-1)^{|exclude|} det(M) with M the
    (include + exclude) block and 1 subtracted on the excluded diagonal.
    """
    entries = K.entries if isinstance(K, KernelMatrix) else np.asarray(K)
    idx = list(include) + list(exclude)
    if len(set(idx)) != len(idx):
        raise ValidationError("include and exclude sets overlap")
    if not idx:
        return 1.0
    sub = entries[np.ix_(idx, idx)].astype(complex).copy()
    for pos in range(len(include), len(idx)):
        sub[pos, pos] -= 1.0
    val = (-1) ** len(exclude) * np.linalg.det(sub)
    if abs(val.imag) > IMAG_RESIDUE_TOL:
        raise KernelError(f"event probability has imaginary residue {val.imag:.3e}")
    return float(val.real)

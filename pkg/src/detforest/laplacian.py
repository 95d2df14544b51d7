"""Bundle Laplacians, characteristic polynomials, and enumeration oracles.

The Laplacian twisted by a flat connection with monodromies (z, w) acts on
fundamental-domain vertex functions.  An edge (u, v, dx, dy, c) contributes
c to both diagonal entries, -c z^dx w^dy to (u, v) and -c z^-dx w^-dy to
(v, u); masses sit on the diagonal.  det(Delta + D_M) as a function of
(z, w) is the characteristic polynomial, recovered here by evaluation on
roots of unity followed by inverse-DFT interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import FiniteCover, PeriodicGraph
from .laurent import LaurentPoly1, LaurentPoly2, interpolate_from_grid

RECIPROCITY_TOL = 1e-10


@dataclass(frozen=True)
class BundleMatrix:
    entries: np.ndarray
    point: tuple  # (z, w)
    mass_included: bool


def d_matrix(g: PeriodicGraph, z, w=1.0):
    """Incidence operator with bundle phases: rows edges, columns vertices."""
    idx = g.vertex_index
    D = np.zeros((len(g.edges), len(g.vertices)), dtype=complex)
    z, w = complex(z), complex(w)
    for k, e in enumerate(g.edges):
        phase = z ** e.dx * w ** e.dy
        D[k, idx[e.u]] += -1.0
        D[k, idx[e.v]] += phase
    return D


def conductance_diag(g: PeriodicGraph):
    return np.array([e.c for e in g.edges], dtype=float)


def delta_matrix(g: PeriodicGraph, z, w=1.0, with_mass=True) -> BundleMatrix:
    """Delta(z, w) (+ D_M when with_mass) as a dense complex matrix."""
    if z == 0 or (g.kind == "torus" and w == 0):
        raise ValidationError("evaluation point coordinates must be nonzero")
    if g.kind == "strip":
        w = 1.0
    dz = d_matrix(g, z, w)
    dzi = d_matrix(g, 1 / z, 1 / w)
    mat = dzi.T @ (conductance_diag(g)[:, None] * dz)
    if with_mass:
        mat += np.diag([g.mass[v] for v in g.vertices])
    return BundleMatrix(mat, (complex(z), complex(w)), with_mass)


def _exponent_bounds(g):
    bz = sum(abs(e.dx) for e in g.edges)
    bw = sum(abs(e.dy) for e in g.edges)
    return bz, bw


def _pow2_at_least(n):
    p = 4
    while p < n:
        p *= 2
    return p


def char_poly(g: PeriodicGraph, radius=1.0, rtol=1e-9):
    """det(Delta + D_M) as a Laurent polynomial in z (strip) or (z, w) (torus).

    Uses evaluation-interpolation on scaled roots of unity.  Exponents per
    variable are bounded by the total offset sum, a safe bound since the
    disjoint cycles of a configuration use each edge at most once.  The
    result is checked for reciprocity.
    """
    bz, bw = _exponent_bounds(g)
    if g.kind == "strip":
        n = _pow2_at_least(2 * bz + 2)
        grid = radius * np.exp(2j * np.pi * np.arange(n) / n)
        vals = np.array([np.linalg.det(delta_matrix(g, zk).entries) for zk in grid])
        poly = interpolate_from_grid(vals, radius, (-bz, bz), rtol=rtol)
        if not poly.is_reciprocal(tol=RECIPROCITY_TOL):
            raise ValidationError("characteristic polynomial failed the reciprocity check")
        return LaurentPoly1({e: c.real for e, c in poly.coeffs.items()})
    n1 = _pow2_at_least(2 * bz + 2)
    n2 = _pow2_at_least(2 * bw + 2)
    r1, r2 = (radius, radius) if np.isscalar(radius) else radius
    zg = r1 * np.exp(2j * np.pi * np.arange(n1) / n1)
    wg = r2 * np.exp(2j * np.pi * np.arange(n2) / n2)
    vals = np.array(
        [[np.linalg.det(delta_matrix(g, zk, wl).entries) for wl in wg] for zk in zg]
    )
    poly = interpolate_from_grid(vals, (r1, r2), ((-bz, bz), (-bw, bw)), rtol=rtol)
    if not poly.is_reciprocal(tol=RECIPROCITY_TOL):
        raise ValidationError("characteristic polynomial failed the reciprocity check")
    return LaurentPoly2({e: c.real for e, c in poly.coeffs.items()})


# ---------------------------------------------------------------------------
# exact enumeration oracle


def _components(nv, edge_list):
    parent = list(range(nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (u, v) in edge_list:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    comps = {}
    for v in range(nv):
        comps.setdefault(find(v), []).append(v)
    return list(comps.values())


def _cycle_monodromy(comp_vertices, comp_edges):
    """Offset class of the unique cycle of a unicyclic component.

    Assigns integer positions along a spanning tree; the one extra edge
    closes the cycle and its offset mismatch is the homology class.
    """
    adj = {v: [] for v in comp_vertices}
    for (u, v, dx, dy, _c, eid) in comp_edges:
        adj[u].append((v, dx, dy, eid))
        adj[v].append((u, -dx, -dy, eid))
    root = comp_vertices[0]
    pos = {root: (0, 0)}
    used = set()
    stack = [root]
    extra = None
    while stack:
        x = stack.pop()
        for (y, dx, dy, eid) in adj[x]:
            if eid in used:
                continue
            used.add(eid)
            py = (pos[x][0] + dx, pos[x][1] + dy)
            if y in pos:
                extra = (py[0] - pos[y][0], py[1] - pos[y][1])
            else:
                pos[y] = py
                stack.append(y)
    return extra


def brute_force_partition(cov, z, w=1.0, max_edges=12):
    """Sum over multi-type spanning forests of wt * masses * cycle factors.

    Every edge subset whose components are all trees or unicyclic
    contributes prod(c_e) * prod over tree components of (sum of masses)
    * prod over cycles of (2 - z^p w^q - z^-p w^-q), the monodromy taken
    from accumulated residual offsets.  Equals det(Delta + D_M) on the
    cover; quadratic-cost enumeration guarded by max_edges.
    """
    g = cov.as_periodic() if isinstance(cov, FiniteCover) else cov
    ne, nv = len(g.edges), len(g.vertices)
    if ne > max_edges:
        raise ValidationError(f"enumeration guard: {ne} edges > {max_edges}")
    idx = g.vertex_index
    elist = [(idx[e.u], idx[e.v], e.dx, e.dy, e.c, k) for k, e in enumerate(g.edges)]
    masses = [g.mass[v] for v in g.vertices]
    z, w = complex(z), complex(w)
    total = 0.0 + 0.0j
    for sub in range(1 << ne):
        chosen = [elist[k] for k in range(ne) if (sub >> k) & 1]
        comps = _components(nv, [(u, v) for (u, v, *_r) in chosen])
        by_comp = {}
        comp_of = {}
        for ci, vs in enumerate(comps):
            for v in vs:
                comp_of[v] = ci
            by_comp[ci] = []
        for ed in chosen:
            by_comp[comp_of[ed[0]]].append(ed)
        weight = 1.0 + 0.0j
        ok = True
        for ci, vs in enumerate(comps):
            k_edges = len(by_comp[ci])
            if k_edges == len(vs) - 1:
                weight *= sum(masses[v] for v in vs)
            elif k_edges == len(vs):
                p, q = _cycle_monodromy(vs, by_comp[ci])
                mono = z ** p * w ** q
                weight *= 2.0 - mono - 1.0 / mono
            else:
                ok = False
                break
            if weight == 0.0:
                break
        if not ok or weight == 0.0:
            continue
        for ed in chosen:
            weight *= ed[4]
        total += weight
    return total

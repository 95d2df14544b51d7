"""Periodic weighted planar graphs, finite covers, and electrical moves.

A graph is a fundamental domain: vertices, edges with integer homology
offsets (dx, dy), positive conductances, and nonnegative vertex masses.
Strips are Z-periodic (dy = 0 on every edge); tori are Z^2-periodic.
Vertex order and edge order are the file order and fix matrix indexing
everywhere downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .errors import ValidationError


@dataclass(frozen=True)
class Edge:
    u: str
    v: str
    dx: int = 0
    dy: int = 0
    c: float = 1.0


@dataclass(frozen=True)
class PeriodicGraph:
    kind: str  # "strip" | "torus"
    vertices: tuple
    edges: tuple
    mass: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(
            self, "mass", {v: float(self.mass.get(v, 0.0)) for v in self.vertices}
        )
        self._validate()

    def _validate(self):
        if self.kind not in ("strip", "torus"):
            raise ValidationError(f"unknown graph kind {self.kind!r}")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValidationError("duplicate vertex ids")
        vset = set(self.vertices)
        for k, e in enumerate(self.edges):
            if e.u not in vset or e.v not in vset:
                raise ValidationError(f"edge {k} references unknown vertex {e.u!r}/{e.v!r}")
            if not e.c > 0:
                raise ValidationError(f"edge {k} ({e.u}-{e.v}) has nonpositive conductance {e.c}")
            if self.kind == "strip" and e.dy != 0:
                raise ValidationError(f"edge {k} ({e.u}-{e.v}) has dy={e.dy} on a strip graph")
        for v, m in self.mass.items():
            if m < 0:
                raise ValidationError(f"vertex {v!r} has negative mass {m}")
        # quotient connectivity, offsets forgotten
        if self.vertices:
            adj = {v: set() for v in self.vertices}
            for e in self.edges:
                adj[e.u].add(e.v)
                adj[e.v].add(e.u)
            seen = {self.vertices[0]}
            stack = [self.vertices[0]]
            while stack:
                for u in adj[stack.pop()]:
                    if u not in seen:
                        seen.add(u)
                        stack.append(u)
            if len(seen) < len(self.vertices):
                missing = sorted(set(self.vertices) - seen)[0]
                raise ValidationError(f"quotient graph is disconnected (vertex {missing!r})")

    @property
    def vertex_index(self):
        return {v: i for i, v in enumerate(self.vertices)}

    def is_massive(self):
        return any(m > 0 for m in self.mass.values())

    def to_json(self):
        return {
            "kind": self.kind,
            "vertices": list(self.vertices),
            "edges": [
                {"u": e.u, "v": e.v, "dx": e.dx, "dy": e.dy, "c": e.c} for e in self.edges
            ],
            "mass": {v: self.mass[v] for v in self.vertices},
        }


def load_graph(source) -> PeriodicGraph:
    """Parse and validate a graph description (JSON text, dict, or file path)."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if "{" not in text:
            with open(text) as fh:
                text = fh.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"graph description is not valid JSON: {exc}") from exc
    try:
        edges = tuple(
            Edge(e["u"], e["v"], int(e.get("dx", 0)), int(e.get("dy", 0)), float(e.get("c", 1.0)))
            for e in doc["edges"]
        )
        return PeriodicGraph(
            kind=doc["kind"],
            vertices=tuple(doc["vertices"]),
            edges=edges,
            mass=doc.get("mass", {}),
        )
    except KeyError as exc:
        raise ValidationError(f"graph description missing field {exc}") from exc


# ---------------------------------------------------------------------------
# builders used by tests, scripts, and the CLI docs


def strip_grid_graph(m, conductance=1.0, mass=0.0):
    """Width-m square-grid strip: m vertices in a column, rungs, and dx=1 loops."""
    verts = [f"v{i}" for i in range(m)]
    edges = [Edge(verts[i], verts[i + 1], 0, 0, conductance) for i in range(m - 1)]
    edges += [Edge(v, v, 1, 0, conductance) for v in verts]
    return PeriodicGraph("strip", verts, edges, {v: mass for v in verts})


def line_graph(conductance=1.0, mass=0.0):
    return PeriodicGraph("strip", ("v0",), (Edge("v0", "v0", 1, 0, conductance),), {"v0": mass})


def square_grid_graph(mass=0.0, conductance=1.0):
    e = (Edge("o", "o", 1, 0, conductance), Edge("o", "o", 0, 1, conductance))
    return PeriodicGraph("torus", ("o",), e, {"o": mass})


def triangular_grid_graph(mass=0.0, conductance=1.0):
    e = (
        Edge("o", "o", 1, 0, conductance),
        Edge("o", "o", 0, 1, conductance),
        Edge("o", "o", 1, 1, conductance),
    )
    return PeriodicGraph("torus", ("o",), e, {"o": mass})


# ---------------------------------------------------------------------------
# width


def width(g: PeriodicGraph) -> int:
    """Maximal number of pairwise vertex-disjoint noncontractible cycles.

    Computed as an integral max-flow with unit vertex capacities on the
    cylinder quotient cut along a meridian: every positively oriented
    crossing edge is split into an arc into the sink and an arc out of the
    source, so source-sink paths are exactly the per-period pieces of
    disjoint bi-infinite paths.
    """
    if g.kind != "strip":
        raise ValidationError("width is defined for strip graphs")
    nv = len(g.vertices)
    idx = g.vertex_index
    # nodes: 0 source, 1 sink, 2+2i in, 3+2i out
    rows, cols, caps = [], [], []

    def arc(a, b):
        rows.append(a)
        cols.append(b)
        caps.append(1)

    for i in range(nv):
        arc(2 + 2 * i, 3 + 2 * i)
    for e in g.edges:
        iu, iv = idx[e.u], idx[e.v]
        if e.dx == 0:
            arc(3 + 2 * iu, 2 + 2 * iv)
            arc(3 + 2 * iv, 2 + 2 * iu)
        elif e.dx > 0:
            arc(3 + 2 * iu, 1)
            arc(0, 2 + 2 * iv)
        else:
            arc(3 + 2 * iv, 1)
            arc(0, 2 + 2 * iu)
    net = csr_matrix((caps, (rows, cols)), shape=(2 + 2 * nv, 2 + 2 * nv))
    return int(maximum_flow(net, 0, 1).flow_value)


# ---------------------------------------------------------------------------
# finite covers


@dataclass(frozen=True)
class CoverEdge:
    u: int  # lifted vertex index
    v: int
    dx: int  # residual offset (wraps of the cover torus/cylinder)
    dy: int
    c: float
    base_index: int


@dataclass(frozen=True)
class FiniteCover:
    base: PeriodicGraph
    n1: int
    n2: int
    vertices: tuple  # (base vertex id, a, b)
    edges: tuple  # CoverEdge

    @property
    def vertex_index(self):
        return {v: i for i, v in enumerate(self.vertices)}

    def mass_of(self, i):
        return self.base.mass[self.vertices[i][0]]

    def as_periodic(self) -> PeriodicGraph:
        """The cover as a periodic graph; residual offsets become the offsets."""
        names = tuple("%s@%d,%d" % v for v in self.vertices)
        edges = tuple(
            Edge(names[e.u], names[e.v], e.dx, e.dy, e.c) for e in self.edges
        )
        mass = {names[i]: self.mass_of(i) for i in range(len(names))}
        return PeriodicGraph(self.base.kind, names, edges, mass)


def cover(g: PeriodicGraph, n1: int, n2: int = 1) -> FiniteCover:
    """The n1 x n2 cover; offsets are reduced and the wrap counts recorded."""
    if n1 < 1 or n2 < 1:
        raise ValidationError("cover sizes must be >= 1")
    if g.kind == "strip" and n2 != 1:
        raise ValidationError("strip graphs only have n2 = 1 covers")
    verts = [(v, a, b) for b in range(n2) for a in range(n1) for v in g.vertices]
    vidx = {v: i for i, v in enumerate(verts)}
    idx = g.vertex_index  # noqa: F841  (kept for readability in debugging)
    edges = []
    for k, e in enumerate(g.edges):
        for (v0, a, b) in verts:
            if v0 != e.u:
                continue
            a2, r1 = (a + e.dx) % n1, (a + e.dx) // n1
            b2, r2 = (b + e.dy) % n2, (b + e.dy) // n2
            edges.append(
                CoverEdge(vidx[(e.u, a, b)], vidx[(e.v, a2, b2)], r1, r2, e.c, k)
            )
    return FiniteCover(g, n1, n2, tuple(verts), tuple(edges))


# ---------------------------------------------------------------------------
# massive electrical transformations


def _incident(g, vid):
    out = []
    for k, e in enumerate(g.edges):
        if e.u == vid or e.v == vid:
            out.append((k, e))
    return out


def _oriented_from(e, vid):
    """Edge as seen leaving vid: (other endpoint, dx, dy)."""
    if e.u == vid:
        return e.v, e.dx, e.dy
    return e.u, -e.dx, -e.dy


def electrical_transform(g: PeriodicGraph, move: str, site) -> PeriodicGraph:
    """Apply one massive electrical move and return the new graph.

    move = "series": site is a degree-2 vertex v0 with edges a, b; it is
        removed, the new conductance is a*b/(a+b+m0) and the neighbor
        masses gain a*m0/(a+b+m0) and b*m0/(a+b+m0).
    move = "parallel": site is a pair of edge indices with equal endpoints
        and homology offsets; conductances add.
    move = "dead_branch": site is a degree-1 vertex v2 with edge a to v1;
        v1 gains a*m2/(a+m2) and the branch disappears.
    move = "star_triangle": site is a degree-3 vertex v0 with edges a, b, c;
        the opposite triangle edge gets bc/(a+b+c+m0) (and cyclically), and
        each neighbor i gains (incident conductance)*m0/(a+b+c+m0).

    The characteristic polynomial det(Delta + D_M) is preserved up to one
    global constant (a+b+m0, a+m2, or (a+b+c+m0)^2 respectively).
    """
    if move == "parallel":
        try:
            k1, k2 = site
            e1, e2 = g.edges[k1], g.edges[k2]
        except (TypeError, ValueError, IndexError) as exc:
            raise ValidationError("parallel move needs a pair of edge indices") from exc
        same = e1.u == e2.u and e1.v == e2.v and (e1.dx, e1.dy) == (e2.dx, e2.dy)
        flipped = e1.u == e2.v and e1.v == e2.u and (e1.dx, e1.dy) == (-e2.dx, -e2.dy)
        if k1 == k2 or not (same or flipped):
            raise ValidationError("edges are not parallel (same endpoints and offset)")
        merged = replace(e1, c=e1.c + e2.c)
        edges = [merged if k == k1 else e for k, e in enumerate(g.edges) if k != k2]
        return PeriodicGraph(g.kind, g.vertices, edges, g.mass)

    v0 = site
    if v0 not in set(g.vertices):
        raise ValidationError(f"unknown vertex {v0!r}")
    inc = _incident(g, v0)
    m0 = g.mass[v0]
    mass = dict(g.mass)

    if move == "series":
        if len(inc) != 2 or any(e.u == e.v for _, e in inc):
            raise ValidationError(f"vertex {v0!r} is not a plain degree-2 vertex")
        (_, ea), (_, eb) = inc
        v1, dxa, dya = _oriented_from(ea, v0)
        v2, dxb, dyb = _oriented_from(eb, v0)
        s = ea.c + eb.c + m0
        mass[v1] += ea.c * m0 / s
        mass[v2] += eb.c * m0 / s
        del mass[v0]
        # path v1 -> v0 -> v2 composes offsets
        new = Edge(v1, v2, -dxa + dxb, -dya + dyb, ea.c * eb.c / s)
        edges = [e for _, e in _complement(g, inc)] + [new]
        verts = tuple(v for v in g.vertices if v != v0)
        return PeriodicGraph(g.kind, verts, edges, mass)

    if move == "dead_branch":
        if len(inc) != 1 or inc[0][1].u == inc[0][1].v:
            raise ValidationError(f"vertex {v0!r} is not a pendant vertex")
        _, ea = inc[0]
        v1, _, _ = _oriented_from(ea, v0)
        mass[v1] += ea.c * m0 / (ea.c + m0)
        del mass[v0]
        edges = [e for _, e in _complement(g, inc)]
        verts = tuple(v for v in g.vertices if v != v0)
        return PeriodicGraph(g.kind, verts, edges, mass)

    if move == "star_triangle":
        if len(inc) != 3 or any(e.u == e.v for _, e in inc):
            raise ValidationError(f"vertex {v0!r} is not a degree-3 star center")
        legs = [_oriented_from(e, v0) + (e.c,) for _, e in inc]  # (vi, dxi, dyi, ci)
        s = sum(c for *_, c in legs) + m0
        for (vi, _, _, ci) in legs:
            mass[vi] += ci * m0 / s
        del mass[v0]
        edges = [e for _, e in _complement(g, inc)]
        for i in range(3):
            (va, dxa, dya, ca) = legs[(i + 1) % 3]
            (vb, dxb, dyb, cb) = legs[(i + 2) % 3]
            # triangle edge opposite leg i runs va -> v0 -> vb
            edges.append(Edge(va, vb, -dxa + dxb, -dya + dyb, ca * cb / s))
        verts = tuple(v for v in g.vertices if v != v0)
        return PeriodicGraph(g.kind, verts, edges, mass)

    raise ValidationError(f"unknown electrical move {move!r}")


def _complement(g, inc):
    drop = {k for k, _ in inc}
    return [(k, e) for k, e in enumerate(g.edges) if k not in drop]

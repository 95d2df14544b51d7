import itertools
import json

import numpy as np
import pytest

import detforest as df
from detforest.errors import ValidationError


def width4_json():
    return {
        "kind": "strip",
        "vertices": ["v0", "v1", "v2", "v3"],
        "edges": (
            [{"u": f"v{i}", "v": f"v{i+1}", "dx": 0, "dy": 0, "c": 1.0} for i in range(3)]
            + [{"u": f"v{i}", "v": f"v{i}", "dx": 1, "dy": 0, "c": 1.0} for i in range(4)]
        ),
    }


def test_load_width4():
    g = df.load_graph(json.dumps(width4_json()))
    assert len(g.vertices) == 4 and len(g.edges) == 7
    assert all(m == 0.0 for m in g.mass.values())


def test_load_line():
    g = df.load_graph({"kind": "strip", "vertices": ["a"],
                       "edges": [{"u": "a", "v": "a", "dx": 1, "c": 1.0}]})
    assert len(g.edges) == 1


@pytest.mark.parametrize("mutate, needle", [
    (lambda d: d["edges"][0].update(c=0.0), "conductance"),
    (lambda d: d.update(mass={"v0": -1.0}), "mass"),
    (lambda d: d["edges"][0].update(dy=1), "dy"),
    (lambda d: d.update(vertices=d["vertices"] + ["lonely"]), "disconnected"),
])
def test_load_validation_errors(mutate, needle):
    doc = width4_json()
    mutate(doc)
    with pytest.raises(ValidationError, match=needle):
        df.load_graph(doc)


def _brute_force_disjoint_cycles(g):
    """Max number of vertex-disjoint noncontractible cycles in the quotient."""
    idx = g.vertex_index
    edges = [(idx[e.u], idx[e.v], e.dx) for e in g.edges]
    nv = len(g.vertices)
    best = 0
    for sub in itertools.chain.from_iterable(
        itertools.combinations(range(len(edges)), r) for r in range(len(edges) + 1)
    ):
        deg = [0] * nv
        for k in sub:
            u, v, _ = edges[k]
            deg[u] += 1
            deg[v] += 1
        if any(d not in (0, 2) for d in deg):
            continue
        # decompose into cycles, all must wind
        adj = {}
        for k in sub:
            u, v, dx = edges[k]
            adj.setdefault(u, []).append((v, dx, k))
            adj.setdefault(v, []).append((u, -dx, k))
        count = 0
        ok = True
        visited_edges = set()
        for k in sub:
            if k in visited_edges:
                continue
            u0, v0, dx0 = edges[k]
            wind = dx0
            visited_edges.add(k)
            prev, cur = u0, v0
            while cur != u0:
                nxt = [t for t in adj[cur] if t[2] not in visited_edges]
                if not nxt:
                    ok = False
                    break
                v, dx, kk = nxt[0]
                visited_edges.add(kk)
                wind += dx
                cur = v
            if not ok:
                break
            if wind == 0:
                ok = False
                break
            count += 1
        if ok and count > best:
            best = count
    return best


def test_width_golden(width4, line):
    assert df.width(width4) == 4
    assert df.width(line) == 1


def test_width_ladder_against_cycle_search():
    ladder = df.PeriodicGraph(
        "strip", ("a", "b"),
        (df.Edge("a", "b"), df.Edge("a", "a", 1, 0), df.Edge("b", "b", 1, 0)),
    )
    assert df.width(ladder) == 2
    assert _brute_force_disjoint_cycles(ladder) == 2
    assert _brute_force_disjoint_cycles(df.line_graph()) == 1


def test_cover_line():
    cov = df.cover(df.line_graph(), 3)
    assert len(cov.vertices) == 3 and len(cov.edges) == 3
    assert sorted(e.dx for e in cov.edges) == [0, 0, 1]


def test_cover_counts(width4, square):
    c1 = df.cover(width4, 2)
    assert len(c1.vertices) == 8 and len(c1.edges) == 14
    c2 = df.cover(square, 2, 2)
    assert len(c2.vertices) == 4 and len(c2.edges) == 8


def test_cover_laplacian_matches_lift(square):
    # forgetting offsets: the cover Laplacian at the trivial connection equals
    # the lifted base Laplacian
    cov = df.cover(square, 2, 2)
    pg = cov.as_periodic()
    lifted = df.delta_matrix(pg, 1.0, 1.0).entries
    direct = np.zeros((4, 4))
    idx = pg.vertex_index
    for e in cov.edges:
        direct[e.u, e.u] += e.c
        direct[e.v, e.v] += e.c
        direct[e.u, e.v] -= e.c
        direct[e.v, e.u] -= e.c
    assert np.allclose(lifted.real, direct) and np.allclose(lifted.imag, 0)


def test_strip_cover_needs_n2_one(width4):
    with pytest.raises(ValidationError):
        df.cover(width4, 2, 2)


# ---------------------------------------------------------------------------
# electrical moves


def det_at(g, z, w):
    return np.linalg.det(df.delta_matrix(g, z, w).entries)


def ratios_constant(g1, g2, seed=0, n=5):
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(n):
        z = np.exp(1j * rng.uniform(0, 2 * np.pi))
        w = np.exp(1j * rng.uniform(0, 2 * np.pi))
        vals.append(det_at(g1, z, w) / det_at(g2, z, w))
    return max(abs(v - vals[0]) for v in vals) < 1e-9 * abs(vals[0]), vals[0]


def test_star_triangle_unit():
    g = df.PeriodicGraph(
        "torus", ("x", "1", "2", "3"),
        (df.Edge("x", "1"), df.Edge("x", "2", 1, 0), df.Edge("x", "3", 0, 1),
         df.Edge("1", "2"), df.Edge("2", "3")),
    )
    out = df.electrical_transform(g, "star_triangle", "x")
    new = [e for e in out.edges if e.c != 1.0]
    assert len(new) == 3 and all(e.c == pytest.approx(1 / 3) for e in new)
    assert all(out.mass[v] == 0.0 for v in out.vertices)
    ok, const = ratios_constant(g, out)
    assert ok and const == pytest.approx(3.0)  # a + b + c + m0


def test_series_move_preserves_determinant():
    g = df.PeriodicGraph(
        "torus", ("a", "b", "c", "d"),
        (df.Edge("a", "b", 0, 0, 2.0), df.Edge("b", "c", 0, 0, 3.0),
         df.Edge("c", "d", 1, 0, 1.5), df.Edge("d", "a", 0, 1, 2.5),
         df.Edge("a", "c", 0, 0, 0.7)),
        {"a": 0.3, "b": 0.8, "c": 0.0, "d": 1.1},
    )
    out = df.electrical_transform(g, "series", "b")
    s = 2.0 + 3.0 + 0.8
    merged = [e for e in out.edges if set((e.u, e.v)) == {"a", "c"} and e.c != 0.7]
    assert merged[0].c == pytest.approx(2.0 * 3.0 / s)
    assert out.mass["a"] == pytest.approx(0.3 + 2.0 * 0.8 / s)
    assert out.mass["c"] == pytest.approx(0.0 + 3.0 * 0.8 / s)
    ok, const = ratios_constant(g, out)
    assert ok and const == pytest.approx(s)


def test_series_unit_halves_conductance():
    g = df.PeriodicGraph(
        "strip", ("a", "b"),
        (df.Edge("a", "b"), df.Edge("b", "a", 1, 0), df.Edge("a", "a", 1, 0)),
    )
    out = df.electrical_transform(g, "series", "b")
    assert len(out.vertices) == 1
    new = [e for e in out.edges if e.c == pytest.approx(0.5)]
    assert len(new) == 1 and abs(new[0].dx) == 1
    ok, const = ratios_constant(g, out)
    assert ok and const == pytest.approx(2.0)


def test_dead_branch_zero_mass_noop_mass():
    g = df.PeriodicGraph(
        "torus", ("a", "b", "p"),
        (df.Edge("a", "b", 1, 0, 2.0), df.Edge("a", "b", 0, 1, 1.0), df.Edge("a", "p", 0, 0, 1.0)),
        {"a": 0.5, "b": 0.2, "p": 0.0},
    )
    out = df.electrical_transform(g, "dead_branch", "p")
    assert out.mass["a"] == pytest.approx(0.5)
    assert len(out.edges) == 2 and "p" not in out.vertices


def test_dead_branch_massive_determinant():
    g = df.PeriodicGraph(
        "torus", ("a", "b", "p"),
        (df.Edge("a", "b", 1, 0, 2.0), df.Edge("a", "b", 0, 1, 1.0), df.Edge("a", "p", 0, 0, 1.3)),
        {"a": 0.5, "b": 0.2, "p": 0.6},
    )
    out = df.electrical_transform(g, "dead_branch", "p")
    assert out.mass["a"] == pytest.approx(0.5 + 1.3 * 0.6 / (1.3 + 0.6))
    ok, const = ratios_constant(g, out)
    assert ok and const == pytest.approx(1.3 + 0.6)


def test_parallel_move():
    g = df.PeriodicGraph(
        "torus", ("a", "b"),
        (df.Edge("a", "b", 0, 0, 2.0), df.Edge("b", "a", 0, 0, 1.0),
         df.Edge("a", "b", 1, 0, 1.0), df.Edge("a", "b", 0, 1, 1.0)),
    )
    out = df.electrical_transform(g, "parallel", (0, 1))
    assert len(out.edges) == 3
    assert out.edges[0].c == pytest.approx(3.0)
    ok, const = ratios_constant(g, out)
    assert ok and const == pytest.approx(1.0)


def test_parallel_rejects_different_offsets():
    g = df.square_grid_graph()
    with pytest.raises(ValidationError):
        df.electrical_transform(g, "parallel", (0, 1))


def test_width_invariant_under_series_and_parallel():
    g = df.PeriodicGraph(
        "strip", ("a", "m", "b"),
        (df.Edge("a", "m"), df.Edge("m", "b"), df.Edge("a", "a", 1, 0),
         df.Edge("b", "b", 1, 0), df.Edge("a", "b", 0, 0, 2.0)),
    )
    w0 = df.width(g)
    out = df.electrical_transform(g, "series", "m")
    assert df.width(out) == w0
    k1 = next(k for k, e in enumerate(out.edges) if set((e.u, e.v)) == {"a", "b"} and (e.dx, e.dy) == (0, 0))
    k2 = next(k for k, e in enumerate(out.edges)
              if set((e.u, e.v)) == {"a", "b"} and (e.dx, e.dy) == (0, 0) and k != k1)
    out2 = df.electrical_transform(out, "parallel", (k1, k2))
    assert df.width(out2) == w0


def test_pattern_mismatch_errors(width4):
    with pytest.raises(ValidationError):
        df.electrical_transform(width4, "series", "v0")  # degree 3 with a loop
    with pytest.raises(ValidationError):
        df.electrical_transform(width4, "dead_branch", "v1")
    with pytest.raises(ValidationError):
        df.electrical_transform(width4, "star_triangle", "v0")
    with pytest.raises(ValidationError):
        df.electrical_transform(width4, "twist", "v0")

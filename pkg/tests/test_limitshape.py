import math
from dataclasses import replace

import numpy as np
import pytest

import detforest as df
from detforest.errors import ValidationError
from detforest.limitshape import check_boundary_feasible, mcshane_extension

CATALAN = 0.915965594177219015


def affine_field(mesh, s, t, zero_interior=True):
    vals = mesh.points @ np.array([s, t])
    if zero_interior:
        vals = np.where(mesh.is_boundary, vals, 0.0)
    return replace(mesh, values=vals.copy())


def field_energy(field, table, regularizer=1e-4):
    areas = field.areas()
    tot = 0.0
    for t in range(len(field.triangles)):
        g = field.gradient(t)
        tot += areas[t] * (table(g[0], g[1]) + regularizer * float(g @ g))
    return tot


def test_table_center_and_vertices(square_table):
    # the stored tension is the convex negation of the per-slope free energy
    assert square_table(0.0, 0.0) == pytest.approx(-4 * CATALAN / math.pi, abs=1e-4)
    for (s, t) in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        i = list(square_table.s_nodes).index(s)
        j = list(square_table.t_nodes).index(t)
        assert square_table.values[i, j] == pytest.approx(0.0, abs=1e-9)


def test_table_symmetry(square_table):
    v = square_table.values
    ins = square_table.inside
    n = v.shape[0] - 1
    for i in range(v.shape[0]):
        for j in range(v.shape[1]):
            if ins[i, j]:
                assert ins[n - i, n - j]
                assert v[i, j] == pytest.approx(v[n - i, n - j], abs=1e-6)


def test_table_midpoint_convexity(square_table):
    assert square_table.convexity_violations(tol=1e-6) == []


def test_table_resolution_guard(square_poly):
    with pytest.raises(ValidationError):
        df.build_tension_table(square_poly, 3)


def test_affine_boundary_gives_affine_minimizer(square_table):
    mesh = df.rectangle_mesh(5, 5)
    exact = mesh.points @ np.array([0.3, 0.15])
    sol, info = df.minimize_height(affine_field(mesh, 0.3, 0.15), square_table, tol=1e-7)
    assert np.max(np.abs(sol.values - exact)) < 1e-6
    energies = info["energies"]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))


def test_two_initializations_agree(square_table):
    mesh = df.rectangle_mesh(5, 5)
    tol = 1e-7
    sol1, _ = df.minimize_height(affine_field(mesh, 0.25, 0.1), square_table, tol=tol)
    rng = np.random.default_rng(8)
    vals = mesh.points @ np.array([0.25, 0.1])
    pert = np.where(mesh.is_boundary, vals, vals + rng.uniform(-0.04, 0.04, len(vals)))
    sol2, _ = df.minimize_height(replace(mesh, values=pert.copy()), square_table, tol=tol)
    assert np.max(np.abs(sol1.values - sol2.values)) < 10 * tol


def test_two_slope_boundary_beats_pure_affine(square_table):
    mesh = df.rectangle_mesh(6, 6)
    pts = mesh.points
    tent = np.where(pts[:, 0] <= 0.5, 0.4 * pts[:, 0], 0.4 * (1 - pts[:, 0]))
    start = replace(mesh, values=np.where(mesh.is_boundary, tent, 0.0).copy())
    sol, info = df.minimize_height(start, square_table, tol=1e-7)
    e_min = info["energies"][-1]
    # single-slope fields at the two tent gradients
    for slope in ((0.4, 0.0), (-0.4, 0.0)):
        aff = replace(mesh, values=(pts @ np.array(slope)).copy())
        assert e_min < field_energy(aff, square_table) - 1e-3
    # and strictly below the piecewise-affine tent extension itself
    tent_field = replace(mesh, values=tent.copy())
    assert e_min < field_energy(tent_field, square_table) - 1e-3


def test_minimizer_gradients_feasible(square_table):
    mesh = df.rectangle_mesh(5, 5)
    sol, _ = df.minimize_height(affine_field(mesh, 0.35, -0.2), square_table, tol=1e-6)
    hull = square_table.feasible
    for t in range(len(sol.triangles)):
        g = sol.gradient(t)
        assert hull.contains(g[0], g[1], tol=1e-6)


def test_mesh_refinement_consistency(square_table):
    tols = {}
    for n in (4, 8):
        mesh = df.rectangle_mesh(n, n)
        pts = mesh.points
        tent = np.where(pts[:, 0] <= 0.5, 0.4 * pts[:, 0], 0.4 * (1 - pts[:, 0]))
        start = replace(mesh, values=np.where(mesh.is_boundary, tent, 0.0).copy())
        _, info = df.minimize_height(start, square_table, tol=1e-6)
        tols[n] = info["energies"][-1]
    assert abs(tols[8] - tols[4]) < 0.05 * abs(tols[4])


def test_infeasible_boundary_rejected(square_table):
    mesh = df.rectangle_mesh(4, 4)
    vals = mesh.points @ np.array([5.0, 0.0])  # way beyond the polygon
    field = replace(mesh, values=np.where(mesh.is_boundary, vals, 0.0).copy())
    with pytest.raises(ValidationError, match="Lipschitz"):
        df.minimize_height(field, square_table, tol=1e-6)


def test_mcshane_extension_is_lipschitz(square_table):
    mesh = df.rectangle_mesh(5, 5)
    field = affine_field(mesh, 0.3, 0.1)
    ext = mcshane_extension(field, square_table.feasible)
    check_boundary_feasible(
        replace(ext, is_boundary=np.ones(len(ext.values), dtype=bool)),
        square_table.feasible,
    )
    # the largest Lipschitz extension dominates the affine one and agrees on
    # the boundary
    exact = mesh.points @ np.array([0.3, 0.1])
    assert np.all(ext.values >= exact - 1e-12)
    assert np.max(np.abs(ext.values[mesh.is_boundary] - exact[mesh.is_boundary])) < 1e-12


# ---------------------------------------------------------------------------
# leaves


def test_leaves_affine_equally_spaced():
    mesh = df.rectangle_mesh(8, 8)
    field = replace(mesh, values=(mesh.points @ np.array([0.0, 1.0])).copy())
    leaves = df.extract_leaves(field, 0.25)
    assert len(leaves) == 5  # levels 0, .25, .5, .75, 1
    for chain in leaves:
        ys = {round(y, 9) for (_, y) in chain}
        assert len(ys) == 1  # horizontal lines
    levels = sorted({round(y, 9) for chain in leaves for (_, y) in chain})
    assert levels == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])


def test_leaves_constant_field_empty():
    mesh = df.rectangle_mesh(4, 4)
    assert df.extract_leaves(mesh, 0.25) == []


def test_leaves_count_matches_height_range(square_table):
    mesh = df.rectangle_mesh(6, 6)
    pts = mesh.points
    tent = np.where(pts[:, 0] <= 0.5, 0.4 * pts[:, 0], 0.4 * (1 - pts[:, 0]))
    start = replace(mesh, values=np.where(mesh.is_boundary, tent, 0.0).copy())
    sol, _ = df.minimize_height(start, square_table, tol=1e-6)
    spacing = 0.05
    leaves = df.extract_leaves(sol, spacing)
    # levels within the height range, each with one or two components (the
    # tent shape splits interior level curves across the ridge)
    nlevels = int(np.floor(sol.values.max() / spacing + 1e-9)) + 1
    assert nlevels <= len(leaves) <= 2 * nlevels + 2


def test_leaves_spacing_guard():
    mesh = df.rectangle_mesh(3, 3)
    with pytest.raises(ValidationError):
        df.extract_leaves(mesh, 0.0)

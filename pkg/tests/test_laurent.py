import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import detforest as df
from detforest.errors import InterpolationError, ValidationError
from detforest.laurent import (LaurentPoly1, LaurentPoly2, poly_from_json,
                               u_expansion, u_power_coeffs)

WIDTH4_COEFFS = {-4: 1, -3: -14, -2: 74, -1: -190, 0: 258,
                 1: -190, 2: 74, 3: -14, 4: 1}


def test_eval_double_root_at_one():
    p = LaurentPoly1({-1: -1, 0: 2, 1: -1})
    assert p(1.0) == 0


def test_eval_width4_at_one_is_zero():
    p = LaurentPoly1(WIDTH4_COEFFS)
    assert abs(p(1.0)) < 1e-12
    assert sum(WIDTH4_COEFFS.values()) == 0


def test_eval_two_variable():
    p = LaurentPoly2({(0, 0): 4, (1, 0): -1, (-1, 0): -1, (0, 1): -1, (0, -1): -1})
    assert p(-1.0, -1.0) == pytest.approx(8.0)  # 4 + 1 + 1 + 1 + 1


def test_eval_zero_coordinate_rejected():
    p = LaurentPoly1({-1: 1.0})
    with pytest.raises(ValidationError):
        p(0.0)
    q = LaurentPoly2({(1, -1): 1.0})
    with pytest.raises(ValidationError):
        q(1.0, 0.0)


def test_interpolate_exact_small():
    p = LaurentPoly1({-1: -1, 0: 2, 1: -1})
    grid = np.exp(2j * np.pi * np.arange(4) / 4)
    vals = np.array([p(z) for z in grid])
    q = df.interpolate_from_grid(vals, 1.0, (-1, 1))
    assert q.coeffs == pytest.approx({-1: -1, 0: 2, 1: -1})


def test_interpolate_width4_from_16_points():
    p = LaurentPoly1(WIDTH4_COEFFS)
    grid = np.exp(2j * np.pi * np.arange(16) / 16)
    vals = np.array([p(z) for z in grid])
    q = df.interpolate_from_grid(vals, 1.0, (-4, 4))
    for e, c in WIDTH4_COEFFS.items():
        assert q.coeffs[e].real == pytest.approx(c, abs=1e-9)


def test_interpolate_two_variable_grid():
    p = LaurentPoly2({(0, 0): 4, (1, 0): -1, (-1, 0): -1, (0, 1): -1, (0, -1): -1})
    zg = np.exp(2j * np.pi * np.arange(8) / 8)
    vals = np.array([[p(z, w) for w in zg] for z in zg])
    q = df.interpolate_from_grid(vals, (1.0, 1.0), ((-1, 1), (-1, 1)), rtol=1e-10)
    assert len(q.coeffs) == 5
    resid = max(abs(q(z, w) - p(z, w)) for z in zg[:3] for w in zg[:3])
    assert resid < 1e-10


def test_interpolate_reports_residual_when_bounds_too_small():
    p = LaurentPoly1({-2: 1.0, 0: 1.0, 2: 1.0})
    grid = np.exp(2j * np.pi * np.arange(8) / 8)
    vals = np.array([p(z) for z in grid])
    with pytest.raises(InterpolationError) as err:
        df.interpolate_from_grid(vals, 1.0, (-1, 1))
    assert err.value.residual is not None and err.value.residual > 1e-9


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.integers(-5, 5),
                       st.tuples(st.floats(-3, 3), st.floats(-3, 3)),
                       min_size=1, max_size=7))
def test_interpolation_round_trip_on_fresh_points(coeffs):
    p = LaurentPoly1({e: complex(a, b) for e, (a, b) in coeffs.items()})
    if not p.coeffs:
        return
    lo, hi = p.degree_lo, p.degree_hi
    n = 16
    grid = np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.array([p(z) for z in grid])
    q = df.interpolate_from_grid(vals, 1.0, (lo, hi), rtol=1e-8)
    rng = np.random.default_rng(0)
    scale = max(abs(v) for v in vals) + 1e-12
    for th in rng.uniform(0, 2 * np.pi, 20):
        z = np.exp(1j * th)
        assert abs(q(z) - p(z)) <= 1e-8 * scale


def test_newton_polygon_square():
    p = LaurentPoly2({(0, 0): 4, (1, 0): -1, (-1, 0): -1, (0, 1): -1, (0, -1): -1})
    hull = df.newton_polygon(p)
    assert set(hull.vertices) == {(1, 0), (0, 1), (-1, 0), (0, -1)}
    assert hull.is_centrally_symmetric()


def test_newton_polygon_triangular_hexagon(triangular):
    hull = df.newton_polygon(df.char_poly(triangular))
    assert set(hull.vertices) == {(1, 0), (0, 1), (1, 1), (-1, 0), (0, -1), (-1, -1)}


def test_newton_polygon_constant_and_empty():
    assert df.newton_polygon(LaurentPoly2({(0, 0): 3.0})).vertices == ((0, 0),)
    with pytest.raises(ValidationError):
        df.newton_polygon(LaurentPoly2({}))


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(st.tuples(st.integers(-3, 3), st.integers(-3, 3)),
                       st.floats(0.5, 2.0), min_size=1, max_size=6),
       st.integers(-3, 3), st.integers(-3, 3))
def test_newton_polygon_monomial_translation(coeffs, a, b):
    p = LaurentPoly2(coeffs)
    q = LaurentPoly2({(i + a, j + b): c for (i, j), c in coeffs.items()})
    hp = df.newton_polygon(p).vertices
    hq = df.newton_polygon(q).vertices
    assert set((i + a, j + b) for (i, j) in hp) == set(hq)


def test_basis_change_single_power():
    assert df.basis_change([1]) == [2, -1]


def test_basis_change_second_power():
    assert df.basis_change([0, 1]) == [6, -4, 1]


def test_basis_change_zero_map():
    assert df.basis_change([0]) == [0, 0]


def _expand_u_series(C):
    # brute-force expansion of sum C_k (2 - X - 1/X)^k as an exponent map
    total = {}
    for k, ck in enumerate(C, start=1):
        for e, v in u_power_coeffs(k).items():
            total[e] = total.get(e, 0) + ck * v
    return total


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=1, max_size=8))
def test_basis_change_matches_expansion_exactly(C):
    D = df.basis_change(C)
    expanded = _expand_u_series(C)
    assert D[0] == expanded.get(0, 0)
    for j in range(1, len(D)):
        assert D[j] == expanded.get(j, 0)
        assert D[j] == expanded.get(-j, 0)
    assert all(isinstance(d, int) for d in D)


def test_u_expansion_round_trip():
    # N_j weights recovered from the expanded polynomial
    C = [3.0, 2.0, 1.0]
    expanded = LaurentPoly1({e: float(v) for e, v in _expand_u_series(C).items()})
    N = u_expansion(expanded)
    assert N[0] == pytest.approx(0.0, abs=1e-9)
    assert N[1:] == pytest.approx(C)


def test_json_round_trip():
    p = LaurentPoly1({-2: 1 + 2j, 3: -0.5})
    assert poly_from_json(p.to_json()).coeffs == pytest.approx(p.coeffs)
    q = LaurentPoly2({(1, -1): 2.0, (0, 0): 1.0})
    assert poly_from_json(q.to_json()).coeffs == pytest.approx(q.coeffs)


def test_reciprocal_check():
    assert LaurentPoly1({-1: -1, 0: 2, 1: -1}).is_reciprocal()
    assert not LaurentPoly1({0: 1, 1: -1}).is_reciprocal()

import numpy as np
import pytest

import detforest as df


@pytest.fixture(scope="session")
def width4():
    return df.strip_grid_graph(4)


@pytest.fixture(scope="session")
def line():
    return df.line_graph()


@pytest.fixture(scope="session")
def square():
    return df.square_grid_graph()


@pytest.fixture(scope="session")
def square_m1():
    return df.square_grid_graph(mass=1.0)


@pytest.fixture(scope="session")
def triangular():
    return df.triangular_grid_graph()


@pytest.fixture(scope="session")
def width4_poly(width4):
    return df.char_poly(width4)


@pytest.fixture(scope="session")
def square_poly(square):
    return df.char_poly(square)


@pytest.fixture(scope="session")
def square_m1_poly(square_m1):
    return df.char_poly(square_m1)


@pytest.fixture(scope="session")
def square_table(square_poly):
    # expensive; shared by the limit-shape tests and the acceptance suite
    return df.build_tension_table(square_poly, 8)


@pytest.fixture(scope="session")
def triangle_graph():
    e = (df.Edge("a", "b"), df.Edge("b", "c"), df.Edge("c", "a"))
    return df.PeriodicGraph("torus", ("a", "b", "c"), e)


@pytest.fixture(scope="session")
def triangle_m1():
    e = (df.Edge("a", "b"), df.Edge("b", "c"), df.Edge("c", "a"))
    return df.PeriodicGraph("torus", ("a", "b", "c"), e, {"a": 1.0, "b": 1.0, "c": 1.0})


def enumerate_width4_quotient(z):
    """Exact cylinder-quotient partition data for the width-4 strip at real z.

    Components of the rung path must each carry exactly one horizontal loop;
    a configuration with j loops weighs (2 - z - 1/z)^j.  Returns (Z, edge
    occupation sums, pair sum for edges 0, 1) in canonical edge order
    (rungs 01, 12, 23, loops at vertices 0..3).
    """
    import itertools

    u = 2.0 - z - 1.0 / z
    Z = 0.0
    probs = np.zeros(7)
    pair01 = 0.0
    for rungs in itertools.product([0, 1], repeat=3):
        comp = [0, 0, 0, 0]
        for v in range(1, 4):
            comp[v] = comp[v - 1] if rungs[v - 1] else comp[v - 1] + 1
        ncomp = comp[3] + 1
        for loops in itertools.product([0, 1], repeat=4):
            cnt = [0] * ncomp
            for v in range(4):
                if loops[v]:
                    cnt[comp[v]] += 1
            if all(c == 1 for c in cnt):
                w = u ** sum(loops)
                Z += w
                for i in range(3):
                    if rungs[i]:
                        probs[i] += w
                for v in range(4):
                    if loops[v]:
                        probs[3 + v] += w
                if rungs[0] and rungs[1]:
                    pair01 += w
    return Z, probs, pair01

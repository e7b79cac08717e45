import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_gate.errors import ConfigError
from spectral_gate.geometry import (Cube, Grid, SampleLattice, annulus_cells, cells_in_annulus,
                                    monomial_integral)


def centers(cells):
    return [c.center for c in cells]


# -- oracles first: hand-enumerated annuli and antiderivatives

def test_annulus_1d_order():
    cells = cells_in_annulus(Grid(1.0, 1), 0.0, 2.0)
    lows = [(c.lower[0], c.upper[0]) for c in cells]
    assert lows == [(0, 1), (-1, 0), (1, 2), (-2, -1)]


def test_annulus_2d_unit():
    cells = cells_in_annulus(Grid(1.0, 2), 0.0, 1.0)
    assert sorted(centers(cells)) == sorted([(0.5, 0.5), (-0.5, 0.5), (0.5, -0.5), (-0.5, -0.5)])


def test_annulus_half_step_far():
    cells = cells_in_annulus(Grid(0.5, 1), 10.0, 10.5)
    assert sorted(centers(cells)) == [(-10.25,), (10.25,)]


def test_annulus_shell_width_defaults_to_step():
    assert annulus_cells(Grid(1.0, 1), 10.0) == cells_in_annulus(Grid(1.0, 1), 10.0, 11.0)


@pytest.mark.parametrize("cube,a,expected", [
    (Cube((0.0,), 1.0), 4, 0.0125),
    (Cube((1.0,), 1.0), 4, 1.5125),
])
def test_monomial_integral_examples(cube, a, expected):
    assert monomial_integral(cube, (a,)) == pytest.approx(expected, rel=1e-14)


def test_monomial_zero_exponent_is_volume():
    Q = Cube((0.3, -2.0, 7.0), 1.7)
    assert monomial_integral(Q, (0, 0, 0)) == pytest.approx(Q.volume())


def test_monomial_far_from_origin_no_cancellation():
    # int_{99.5}^{100.5} x^6 dx by exact rational arithmetic
    from fractions import Fraction
    lo, hi = Fraction(199, 2), Fraction(201, 2)
    exact = float((hi ** 7 - lo ** 7) / 7)
    assert monomial_integral(Cube((100.0,), 1.0), (6,)) == pytest.approx(exact, rel=1e-14)


# -- invariants

def test_cube_basics():
    Q = Cube((1.0, 2.0), 2.0)
    assert Q.volume() == 4.0
    assert Q.scaled(3).center == Q.center and Q.scaled(3).side == 6.0
    kids = Q.children()
    assert len(kids) == 4 and sum(k.volume() for k in kids) == pytest.approx(Q.volume())
    assert kids[0].center == (0.5, 1.5)
    with pytest.raises(ConfigError):
        Cube((0.0,), 0.0)


def test_grid_cell():
    g = Grid(0.5, 2)
    c = g.cell((3, -1))
    assert np.allclose(c.lower, [1.5, -0.5]) and c.side == 0.5


@given(st.floats(-50, 50), st.floats(0.01, 10), st.integers(1, 20), st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_lattice_weights_and_interior(c, side, m, n):
    Q = Cube((c,) * n, side)
    lat = SampleLattice(Q, m)
    assert lat.nodes.shape == (m ** n, n)
    assert lat.weight * lat.size == pytest.approx(Q.volume())
    assert np.all(lat.nodes > Q.lower) and np.all(lat.nodes < Q.upper)


@given(st.integers(0, 9), st.floats(-20, 20), st.floats(0.1, 3))
@settings(max_examples=60, deadline=None)
def test_monomial_matches_quadrature(a, c, side):
    Q = Cube((c,), side)
    lat = SampleLattice(Q, 4000)
    quad = (lat.nodes[:, 0] ** a).sum() * lat.weight
    exact = monomial_integral(Q, (a,))
    assert exact == pytest.approx(quad, rel=1e-5, abs=1e-9 * (1 + abs(c)) ** a)


@given(st.floats(0.1, 3), st.floats(0.2, 3), st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_annulus_membership(r0, w, n):
    g = Grid(0.5, n)
    cells = cells_in_annulus(g, r0, r0 + w)
    norms = [np.linalg.norm(c.center) for c in cells]
    assert all(r0 - 1e-12 <= r < r0 + w for r in norms)
    assert norms == sorted(norms)
    # every cell of the enclosing box with a center in range is present
    box = [c for c in g.cells_in_box(r0 + w + 1) if r0 <= np.linalg.norm(c.center) < r0 + w]
    assert len(box) == len(cells)

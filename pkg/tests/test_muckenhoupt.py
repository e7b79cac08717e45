import numpy as np
import pytest

from spectral_gate.errors import ConfigError, HypothesisError
from spectral_gate.geometry import Cube, Grid
from spectral_gate.muckenhoupt import (a2loc_bracket, ainfty_fraction, ainfty_scan, condition_b_margin,
                                       sphere_directions)
from spectral_gate.potential import FunctionPotential, MatrixPolynomial, gallery
from spectral_gate.verdict import Status

ONE = MatrixPolynomial(1, 1, {(0,): [[1.0]]})
X2 = MatrixPolynomial(1, 1, {(2,): [[1.0]]})
X4 = MatrixPolynomial(1, 1, {(4,): [[1.0]]})


def sublevel_fraction_x2(Q, delta):
    """Exact measure of {x in Q : x^2 >= delta * avg_Q x^2} / |Q|."""
    lo, hi = Q.lower[0], Q.upper[0]
    avg = (hi ** 3 - lo ** 3) / 3 / Q.side
    t = np.sqrt(delta * avg)
    inside = max(0.0, min(hi, t) - max(lo, -t))
    return 1.0 - inside / Q.side


def test_fraction_constant():
    assert ainfty_fraction(ONE, Cube((3.0,), 2.0), 0.5) == 1.0


@pytest.mark.parametrize("delta", [0.5, 0.1, 0.01])
def test_fraction_w0_zero(delta):
    for c in (-2.5, 0.5, 3.5):
        assert ainfty_fraction(gallery("W0"), Cube((c,), 1.0), delta) == 0.0


def test_fraction_x2_oracle():
    Q = Cube((0.0,), 2.0)
    assert sublevel_fraction_x2(Q, 0.03) == pytest.approx(0.9)
    assert ainfty_fraction(X2, Q, 0.03, m=2000) == pytest.approx(0.9, abs=1e-3)


def test_scan_w0_violated():
    v = ainfty_scan(gallery("W0"), 0.1, 0.1, 1.0, 4.0)
    assert v.status is Status.VIOLATED and v.witnesses


def test_scan_identity_satisfied():
    I2 = MatrixPolynomial(1, 2, {(0,): np.eye(2)})
    assert ainfty_scan(I2, 0.5, 0.9, 1.0, 2.0).status is Status.SATISFIED_SAMPLED


def test_scan_x2_satisfied():
    v = ainfty_scan(X2, 0.03, 0.85, 1.0, 4.0, m=64)
    assert v.status is Status.SATISFIED_SAMPLED
    worst = min(r["min_fraction"] for r in v.table)
    oracle = min(sublevel_fraction_x2(q, 0.03) for s in (1.0, 0.5, 0.25) for q in Grid(s, 1).cells_in_box(4.0))
    assert worst == pytest.approx(oracle, abs=2 / 64)


def test_bad_params():
    with pytest.raises(ConfigError):
        ainfty_fraction(ONE, Cube((0.0,), 1.0), 1.5)
    with pytest.raises(ConfigError):
        condition_b_margin(ONE, Cube((0.0,), 1.0), 0.0)


def test_condition_b_identity():
    I2 = MatrixPolynomial(1, 2, {(0,): np.eye(2)})
    assert condition_b_margin(I2, Cube((0.0,), 1.0), 0.5).beta == pytest.approx(0.5)


def test_condition_b_w0_direction():
    res = condition_b_margin(gallery("W0"), Cube((0.5,), 1.0), 0.5, m=512, u_samples=[[0, 1]])
    assert res.beta == pytest.approx(0.125, rel=1e-4)
    full = condition_b_margin(gallery("W0"), Cube((0.5,), 1.0), 0.5, m=256)
    assert full.beta <= 0.125 + 1e-3


def test_condition_b_x4():
    # worst A of measure 0.9*2 is the sublevel set [-0.9, 0.9]: beta = 0.9^5
    res = condition_b_margin(X4, Cube((0.0,), 2.0), 0.9, m=4000)
    assert res.beta == pytest.approx(0.9 ** 5, rel=1e-3)


def test_sphere_directions_unit():
    u = sphere_directions(3, 64)
    assert u.shape == (67, 3)
    assert np.allclose(np.linalg.norm(u, axis=1), 1)


def test_a2_constant_cases():
    cubes = Grid(1.0, 1).cells_in_box(2.0)
    assert a2loc_bracket(MatrixPolynomial(1, 2, {(0,): np.eye(2)}), cubes) == pytest.approx(1.0)
    assert a2loc_bracket(MatrixPolynomial(1, 2, {(0,): np.diag([1.0, 1e-6])}), cubes) == pytest.approx(1.0)


def test_a2_sine_scalar():
    W = FunctionPotential(1, 1, lambda p: 2 + np.sin(3 * p[:, 0]))
    cubes = Grid(1.0, 1).cells_in_box(3.0)
    T = a2loc_bracket(W, cubes, m=256)
    # scalar oracle sqrt(avg W * avg 1/W), maximized over the cubes
    oracle = 0.0
    for q in cubes:
        x = q.lattice(256).nodes[:, 0]
        w = 2 + np.sin(3 * x)
        oracle = max(oracle, np.sqrt(w.mean() * (1 / w).mean()))
    assert T == pytest.approx(oracle, rel=1e-10)
    assert T > 1


def test_a2_singular_raises():
    with pytest.raises(HypothesisError):
        a2loc_bracket(gallery("W0"), [Cube((0.5,), 1.0)])

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_gate.errors import ConfigError
from spectral_gate.geometry import Cube, SampleLattice
from spectral_gate.oscillation import (ConstantSubspace, PartitionScheme, PiecewiseSubspaceField,
                                       SubspaceFamilySpec, build_degenerate_potential, delta_separation,
                                       omega, omega_infinity, omega_lower_bound_check, theorem13_check)
from spectral_gate.verdict import Status

R2 = np.sqrt(0.5)
Q1 = Cube((0.5,), 1.0)
SCHEME = PartitionScheme([2, 2, 2, 2], [2, 4, 8, 16])


def phase_oracle(vectors, etas, steps=720):
    """omega for a piecewise field of lines: sup over constant-phase sections on each part."""
    v = [np.asarray(x, dtype=complex) / np.linalg.norm(x) for x in vectors]
    th = np.linspace(0, 2 * np.pi, steps, endpoint=False)
    best = 0.0
    for phases in itertools.product(th, repeat=len(v) - 1):
        s = etas[0] * v[0] + sum(e * np.exp(1j * p) * w for e, p, w in zip(etas[1:], phases, v[1:]))
        best = max(best, np.linalg.norm(s))
    return np.sqrt(max(0.0, 1 - best ** 2))


# -- oracles

def test_constant_field_zero():
    S = ConstantSubspace(1, [[1.0], [1j]])
    assert omega(Q1, S).omega == pytest.approx(0, abs=1e-7)


def test_orthogonal_halves():
    fam = SubspaceFamilySpec([[1, 0], [0, 1]])
    res = omega(Q1, PiecewiseSubspaceField(fam, Q1), m=64)
    assert res.omega == pytest.approx(R2, abs=1e-6)
    assert res.omega == pytest.approx(phase_oracle([[1, 0], [0, 1]], [0.5, 0.5]), abs=1e-4)


def test_three_lines_against_oracle():
    vecs = [[1, 0], [1, 1], [0, 1]]
    fam = SubspaceFamilySpec(vecs)
    om, bound = omega_lower_bound_check(Cube((0.0,), 3.0), fam, m=60)
    assert om == pytest.approx(phase_oracle(vecs, [1 / 3] * 3, steps=360), abs=2e-3)
    assert bound == pytest.approx(np.sqrt((1 - R2) / 3), abs=1e-4)
    assert om >= bound


def test_identical_parts_zero():
    fam = SubspaceFamilySpec([[1, 1j], [2, 2j]])
    assert omega(Q1, PiecewiseSubspaceField(fam, Q1)).omega == pytest.approx(0, abs=1e-7)


def test_history_monotone():
    fam = SubspaceFamilySpec([[1, 0, 0], [0, 1, 1], [1, 1j, 0]])
    res = omega(Q1, PiecewiseSubspaceField(fam, Q1), m=30)
    assert all(b >= a - 1e-12 for a, b in zip(res.history, res.history[1:]))


@pytest.mark.parametrize("vecs,expected,tol", [
    ([[1, 0], [0, 1]], 1.0, 1e-6),
    ([[1, 0], [1, 1]], 1 - R2, 1e-4),
    ([[1, 0], [1, 0]], 0.0, 1e-9),
])
def test_delta_separation(vecs, expected, tol):
    assert delta_separation(SubspaceFamilySpec(vecs)) == pytest.approx(expected, abs=tol)


def test_delta_separation_planes_in_c3():
    fam = SubspaceFamilySpec.coordinate(3)
    # v in span(e2, e3) with |P_{span(e1,e3)} v| minimal over the max... oracle by dense sphere grid
    oracle = np.inf
    Ps = fam.projector_stack
    for j, F in enumerate(fam.frames):
        for t in np.linspace(0, np.pi, 721):
            v = F @ np.array([np.cos(t), np.sin(t)])
            oracle = min(oracle, max(1 - np.linalg.norm(Ps[k] @ v) for k in range(3) if k != j))
    assert delta_separation(fam) == pytest.approx(oracle, abs=1e-5)


def test_bound_single_part():
    fam = SubspaceFamilySpec([[1, 0]])
    om, bound = omega_lower_bound_check(Q1, fam)
    assert bound == 0.0 and om == pytest.approx(0, abs=1e-7)


def test_orthogonal_bound_tight():
    om, bound = omega_lower_bound_check(Q1, SubspaceFamilySpec([[1, 0], [0, 1]]), m=64)
    assert om == pytest.approx(R2, abs=1e-4) and bound == pytest.approx(R2, abs=1e-4)


# -- glued fields and degenerate potentials

def test_partition_scheme():
    assert np.allclose(SCHEME.steps, [0.5, 0.25, 0.125, 0.0625])
    assert SCHEME.step_at([[1.0], [3.0], [100.0]]).tolist() == [0.5, 0.25, 0.0625]
    for m in range(1, 5):
        assert SCHEME.satisfies_star(m)
    with pytest.raises(ConfigError):
        PartitionScheme([1, 2], [1, 2])
    with pytest.raises(ConfigError):
        PartitionScheme([2, 2], [4, 2])


def test_omega_infinity_glued():
    V = build_degenerate_potential(SCHEME, SubspaceFamilySpec.coordinate(2))
    for ell in SCHEME.steps:
        oi = omega_infinity(ell, V.subspace_field, [12], m=32)
        assert oi.value == pytest.approx(R2, abs=1e-3)


def test_omega_infinity_constant_zero():
    oi = omega_infinity(0.5, ConstantSubspace(1, [1, 0]), [2, 4])
    assert all(r["min_omega"] == pytest.approx(0, abs=1e-7) for r in oi.per_annulus)


def test_degenerate_potential_properties(rng):
    V = build_degenerate_potential(SCHEME, SubspaceFamilySpec.coordinate(2))
    x = rng.uniform(-20, 20, size=(200, 1))
    vals = V.evaluate(x)
    assert np.allclose(np.linalg.matrix_rank(vals), 1)
    assert np.allclose(np.linalg.eigvalsh(vals)[:, 0], 0, atol=1e-9)
    PS = V.subspace_field.projectors(x)
    w, vecs = np.linalg.eigh(PS)
    s = vecs[np.arange(200), :, -1]
    assert np.allclose(np.einsum("ni,nij,nj->n", s.conj(), vals, s), 0, atol=1e-9)
    assert np.allclose(np.linalg.eigvalsh(vals)[:, 1], x[:, 0] ** 2)


def test_degenerate_rejects():
    with pytest.raises(ConfigError):
        build_degenerate_potential(SCHEME, SubspaceFamilySpec([[1, 0], [2, 0]]))
    with pytest.raises(ConfigError):
        build_degenerate_potential(SCHEME, SubspaceFamilySpec.coordinate(2), "power", 0.0)
    with pytest.raises(ConfigError):
        SubspaceFamilySpec([[1, 0], [0, 1], [1, 1]], kind="checkerboard")


def test_theorem13_degenerate_and_constant():
    V = build_degenerate_potential(SCHEME, SubspaceFamilySpec.coordinate(2))
    v = theorem13_check(V, V.subspace_field, [0.5, 0.25, 0.125], [4, 8, 12])
    assert v.status is Status.SATISFIED_SAMPLED
    S = ConstantSubspace(1, [1, 0])
    from spectral_gate.potential import FunctionPotential
    Vc = FunctionPotential(1, 2, lambda p: (1 + p[:, 0] ** 2)[:, None, None] * np.diag([0.0, 1.0])[None])
    assert theorem13_check(Vc, S, [0.5, 0.25], [4, 8, 12]).status is Status.INCONCLUSIVE


def test_family_round_trip():
    fam = SubspaceFamilySpec([[1, 1j], [0, 1]], [0.25, 0.75])
    back = SubspaceFamilySpec.from_dict(fam.to_dict())
    assert np.allclose(back.projector_stack, fam.projector_stack)
    assert back.fractions == fam.fractions


@st.composite
def families(draw):
    d = draw(st.integers(2, 3))
    N = draw(st.integers(2, 3))
    seed = draw(st.integers(0, 2 ** 31))
    g = np.random.default_rng(seed)
    subs = [g.normal(size=(d, 1)) + 1j * g.normal(size=(d, 1)) for _ in range(N)]
    return SubspaceFamilySpec(subs)


@given(families())
@settings(max_examples=15, deadline=None)
def test_omega_in_unit_interval_and_above_bound(fam):
    om = omega(Q1, PiecewiseSubspaceField(fam, Q1), m=24).omega
    assert 0.0 <= om <= 1.0
    if fam.trivial_intersection():
        lat = SampleLattice(Q1, 24)
        parts = PiecewiseSubspaceField(fam, Q1).part_index(lat.nodes)
        eta = min(np.mean(parts == j) for j in range(fam.N))
        assert om >= np.sqrt(delta_separation(fam, 64) * eta) - 1e-6


@given(st.integers(0, 2 ** 31))
@settings(max_examples=10, deadline=None)
def test_omega_unitary_invariance(seed):
    g = np.random.default_rng(seed)
    fam = SubspaceFamilySpec([g.normal(size=(2, 1)) for _ in range(3)])
    S = PiecewiseSubspaceField(fam, Q1)
    U, _ = np.linalg.qr(g.normal(size=(2, 2)) + 1j * g.normal(size=(2, 2)))
    assert omega(Q1, S.rotated(U), m=24).omega == pytest.approx(omega(Q1, S, m=24).omega, abs=1e-8)

import numpy as np
import pytest

from nzkit.dynamics import TimeGrid, propagate, steady_state
from nzkit.errors import ValidationError
from nzkit.liouvillian import LiouvillianSpec, evaluate_at, generator_residual
from nzkit.models import (
    LAMBDA_PHYSICAL,
    build_lambda,
    build_optomech,
    fock_annihilation,
    random_bipartite,
    random_hermitian,
    thermal_state,
)
from nzkit.reductions import LambdaParams, OptomechParams
from nzkit.superop import commutator_superop, hermiticity_residual

pytestmark = pytest.mark.filterwarnings("ignore:mechanical cutoff")

COOLING = dict(omega_m=10.0, delta=10.0, kappa=1.0, gamma_m=1e-3, nbar=10.0, g=0.05)


def test_fock_annihilation():
    assert np.array_equal(fock_annihilation(2), [[0, 1], [0, 0]])
    a = fock_annihilation(5)
    assert np.allclose(a.conj().T @ a, np.diag(np.arange(5)))
    comm = a @ a.conj().T - a.conj().T @ a
    expected = np.eye(5)
    expected[4, 4] -= 5
    assert np.allclose(comm, expected)
    with pytest.raises(ValidationError):
        fock_annihilation(1)


def test_thermal_state():
    assert np.array_equal(thermal_state(4, 0.0), np.diag([1.0, 0, 0, 0]))
    rho = thermal_state(30, 0.5)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-15)
    assert abs(np.trace(rho @ np.diag(np.arange(30))) - 0.5) < 1e-6
    with pytest.raises(ValidationError):
        thermal_state(4, -1.0)


def test_lambda_hamiltonian_elements(rng):
    p = LambdaParams(0.7 + 0.2j, -0.3j, 0.4, 25.0)
    m = build_lambda(p)
    assert m.h_full[2, 0] == p.omega_a / 2
    assert m.h_full[2, 2] == p.bigdelta and m.h_full[0, 0] == -p.delta / 2
    zero = build_lambda(LambdaParams(0, 0, 0.4, 25.0)).h_full
    assert np.array_equal(zero, np.diag(np.diag(zero)))
    for _ in range(10):
        oa, ob = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        h = build_lambda(LambdaParams(oa, ob, 0.1, 100.0)).h_full
        assert hermiticity_residual(h) < 1e-15


def test_lambda_embedding_matches_physical_hamiltonian():
    p = LambdaParams(0.7 + 0.2j, -0.3j, 0.4, 25.0)
    m = build_lambda(p)
    h6 = np.kron(m.h_s_embedded, np.eye(2)) + np.kron(np.eye(3), np.diag([0, p.bigdelta])) \
        + m.interaction.operator_at(0.0)
    idx = np.array(LAMBDA_PHYSICAL)
    assert np.allclose(h6[np.ix_(idx, idx)], m.h_full)


def test_lambda_warns_outside_adiabatic_regime():
    with pytest.warns(UserWarning, match="adiabatic"):
        build_lambda(LambdaParams(1.0, 1.0, 0.0, 5.0))


def test_lambda_full_dynamics_excited_bound():
    p = LambdaParams(1.0, 1.0, 0.0, 50.0)
    m = build_lambda(p)
    spec = LiouvillianSpec(3, {"system": commutator_superop(m.h_full)})
    rho0 = np.diag([1.0, 0, 0]).astype(complex)
    traj = propagate(spec, rho0, TimeGrid(0, 200 * np.pi, 4000), substeps=40)
    pe = traj.states[:, 2, 2].real
    assert pe.max() <= 4 * (1 / (2 * 50)) ** 2
    assert np.max(np.abs(np.einsum("nii->n", traj.states) - 1)) < 1e-9


def test_optomech_interaction_picture():
    p = OptomechParams(**COOLING, n_cav=3, n_mech=4)
    m = build_optomech(p)
    assert sorted(x.freq for x in m.spec_interaction.pieces) == [-p.omega_m, p.omega_m]
    diff = evaluate_at(m.spec_schrodinger, 0.0) - evaluate_at(m.spec_interaction, 0.0)
    assert np.max(np.abs(diff - commutator_superop(p.omega_m * m.ops["n_mech"]))) < 1e-12
    for spec in (m.spec_schrodinger, m.spec_interaction):
        for t in (0.0, 0.123, 1.7):
            assert generator_residual(evaluate_at(spec, t)) < 1e-10


def test_optomech_uncoupled_steady_state():
    p = OptomechParams(**{**COOLING, "g": 0.0, "nbar": 0.7}, n_cav=2, n_mech=8)
    m = build_optomech(p)
    rho = steady_state(m.spec_schrodinger.static_part)
    expected = np.kron(thermal_state(8, 0.7), thermal_state(2, 0.0))
    assert np.max(np.abs(rho - expected)) < 1e-8


def test_optomech_cutoff_warning():
    with pytest.warns(UserWarning, match="mechanical cutoff"):
        build_optomech(OptomechParams(**COOLING, n_cav=2, n_mech=3))


def test_random_bipartite_is_seeded(rng):
    a, b = random_bipartite(11, coupling=0.4), random_bipartite(11, coupling=0.4)
    assert np.array_equal(a.v, b.v) and np.array_equal(a.h_s, b.h_s)
    assert not np.array_equal(a.v, random_bipartite(12, coupling=0.4).v)
    assert np.isclose(np.linalg.norm(a.v, 2), 0.4)
    h = random_hermitian(rng, 3, 2.5)
    assert np.isclose(np.linalg.norm(h, 2), 2.5) and hermiticity_residual(h) < 1e-15


def test_random_bipartite_bath_state_is_stationary():
    m = random_bipartite(0)
    assert np.max(np.abs(m.lb @ m.bath_state.reshape(-1, order="F"))) < 1e-12
    # total Liouvillian equals the raw Hamiltonian plus bath decay
    h = np.kron(m.h_s, np.eye(2)) + np.kron(np.eye(2), m.h_b) + m.v
    bath_only = m.spec.part("bath") - commutator_superop(np.kron(np.eye(2), m.h_b))
    assert np.allclose(m.spec.static_part, commutator_superop(h) + bath_only)

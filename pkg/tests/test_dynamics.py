import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_complex, random_density
from nzkit.dynamics import (
    TimeGrid,
    is_valid_generator,
    nz_consistency,
    propagate,
    rk4_step_matrix,
    steady_state,
    superop_exp,
)
from nzkit.errors import NumericalError, ValidationError
from nzkit.liouvillian import LiouvillianSpec, OscillatoryPiece, build_projector
from nzkit.models import build_bipartite, fock_annihilation, random_bipartite
from nzkit.superop import (
    TensorSpace,
    commutator_superop,
    dissipator_superop,
    raw_commutator_superop,
    vectorize,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
LOWER = fock_annihilation(2)
EXCITED = np.diag([0.0, 1.0]).astype(complex)
GROUND = np.diag([1.0, 0.0]).astype(complex)


def decay_spec(gamma=0.8):
    return LiouvillianSpec(2, {"system": dissipator_superop(LOWER, gamma)})


def test_time_grid():
    g = TimeGrid(0.0, 2.0, 4)
    assert g.dt == 0.5 and np.allclose(g.times, [0, 0.5, 1, 1.5, 2])
    with pytest.raises(ValidationError):
        TimeGrid(1.0, 1.0, 10)
    with pytest.raises(ValidationError):
        TimeGrid(0.0, 1.0, 0)


def test_zero_liouvillian_constant(rng):
    rho = random_density(rng, 3)
    traj = propagate(LiouvillianSpec(3, {"system": np.zeros((9, 9))}), rho, TimeGrid(0, 1, 10))
    assert np.array_equal(traj.states[-1], rho)
    assert len(traj) == 11


def test_rabi_oscillation():
    omega = 1.3
    t1 = 4 * np.pi / omega
    spec = LiouvillianSpec(2, {"system": commutator_superop(omega / 2 * SX)})
    traj = propagate(spec, GROUND, TimeGrid(0, t1, 4000), {"excited": EXCITED})
    exact = np.sin(omega * traj.times / 2) ** 2
    assert np.max(np.abs(traj.observables["excited"] - exact)) < 1e-8


def test_decay_and_superop_exp():
    gamma = 0.8
    spec = decay_spec(gamma)
    grid = TimeGrid(0, 5, 4000)
    traj = propagate(spec, EXCITED, grid, {"n": EXCITED})
    assert np.max(np.abs(traj.observables["n"] - np.exp(-gamma * traj.times))) < 1e-8
    end = superop_exp(spec.static_part, 5.0) @ vectorize(EXCITED)
    assert np.max(np.abs(end - vectorize(traj.states[-1]))) < 1e-8


def test_substeps_match_fine_grid():
    spec = decay_spec()
    a = propagate(spec, EXCITED, TimeGrid(0, 2, 50), substeps=8)
    b = propagate(spec, EXCITED, TimeGrid(0, 2, 400))
    assert np.allclose(a.states[-1], b.states[-1], atol=1e-14)


def test_time_dependent_matches_static_rotation():
    # a piece at frequency w and its conjugate partner; compare against a fine static reference
    w = 2.0
    o = 0.3 * SX
    spec = LiouvillianSpec(2, {"system": dissipator_superop(LOWER, 0.2)}, (
        OscillatoryPiece(raw_commutator_superop(o) / 2, w),
        OscillatoryPiece(raw_commutator_superop(o) / 2, -w),
    ))
    coarse = propagate(spec, EXCITED, TimeGrid(0, 3, 300))
    fine = propagate(spec, EXCITED, TimeGrid(0, 3, 600))
    assert np.max(np.abs(coarse.states[-1] - fine.states[-1])) < 1e-8
    assert abs(np.trace(coarse.states[-1]) - 1) < 1e-12


def test_propagate_reports_invalid_state():
    # a non-physical generator drives populations negative
    bad = LiouvillianSpec(2, {"system": -dissipator_superop(LOWER, 1.0)})
    with pytest.raises(NumericalError, match="invalid state at t ="):
        propagate(bad, EXCITED, TimeGrid(0, 3, 300))


def test_propagate_validates_inputs(rng):
    with pytest.raises(ValidationError):
        propagate(decay_spec(), random_density(rng, 3), TimeGrid(0, 1, 10))
    with pytest.raises(ValidationError):
        propagate(decay_spec(), EXCITED, TimeGrid(0, 1, 10), {"x": np.eye(3)})


def test_rk4_step_matrix_is_taylor():
    s = decay_spec().static_part
    h = 0.01
    step = rk4_step_matrix(s, h)
    assert np.max(np.abs(step - superop_exp(s, h))) < 1e-11


def test_superop_exp_examples():
    assert np.allclose(superop_exp(np.zeros((4, 4)), 3.0), np.eye(4))
    lam = np.array([-1.0, -0.5j, 0.2, 0.0])
    assert np.allclose(superop_exp(np.diag(lam), 1.5), np.diag(np.exp(lam * 1.5)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 2.0), st.floats(0.1, 2.0))
def test_superop_exp_semigroup(seed, t1, t2):
    rng = np.random.default_rng(seed)
    h = random_complex(rng, 3, 3)
    s = commutator_superop(h + h.conj().T) + dissipator_superop(random_complex(rng, 3, 3))
    s *= 5 / np.linalg.norm(s, 2)
    lhs = superop_exp(s, t1 + t2)
    assert np.max(np.abs(lhs - superop_exp(s, t1) @ superop_exp(s, t2))) < 1e-9


def test_steady_state_examples():
    assert np.allclose(steady_state(decay_spec().static_part), GROUND, atol=1e-12)
    b = fock_annihilation(20)
    g, nbar = 0.3, 0.5
    s = dissipator_superop(b, g * (nbar + 1)) + dissipator_superop(b.conj().T, g * nbar)
    rho = steady_state(s)
    assert abs(np.trace(rho @ b.conj().T @ b) - nbar) < 1e-6
    assert np.linalg.norm(s @ vectorize(rho)) < 1e-9
    with pytest.raises(NumericalError, match="non-unique steady state"):
        steady_state(commutator_superop(np.diag([0.0, 1.0])))


def test_nz_zero_interaction_and_initial_residual(rng):
    space = TensorSpace((2, 2))
    h_s = random_complex(rng, 2, 2)
    h_b = random_complex(rng, 2, 2)
    model = build_bipartite(h_s + h_s.conj().T, h_b + h_b.conj().T, np.zeros((4, 4)), 1.0, space)
    proj = build_projector(model.bath_state, space)
    rep = nz_consistency(model.spec, proj, GROUND, TimeGrid(0, 1, 200))
    assert rep.max_residual < 1e-12
    model = random_bipartite(1)
    rep = nz_consistency(model.spec, build_projector(model.bath_state, space), GROUND,
                         TimeGrid(0, 1, 200))
    # Q (rho_S x rho_B) vanishes analytically; only rounding remains
    assert rep.residuals[0] < 1e-15


def test_nz_fourth_order_and_trapezoid():
    model = random_bipartite(7)
    proj = build_projector(model.bath_state, model.space)
    runs = {}
    for rule in ("cubic", "trapezoid"):
        a = nz_consistency(model.spec, proj, GROUND, TimeGrid(0, 2, 500), rule).max_residual
        b = nz_consistency(model.spec, proj, GROUND, TimeGrid(0, 2, 1000), rule).max_residual
        runs[rule] = a / b
    assert runs["cubic"] >= 12
    assert 3.5 < runs["trapezoid"] < 4.5
    with pytest.raises(ValidationError):
        nz_consistency(model.spec, proj, GROUND, TimeGrid(0, 1, 10), "simpson")


def test_is_valid_generator():
    assert is_valid_generator(decay_spec().static_part)
    assert not is_valid_generator(np.eye(4))

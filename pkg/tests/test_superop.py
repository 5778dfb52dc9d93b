import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_complex, random_density
from nzkit.errors import ValidationError
from nzkit.models import fock_annihilation, thermal_state
from nzkit.superop import (
    TensorSpace,
    apply,
    check_density_matrix,
    commutator_superop,
    devectorize,
    dissipator_superop,
    expectation,
    kron,
    partial_trace,
    restrict_superop,
    superop_from_map,
    trace_distance,
    vectorize,
)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0]).astype(complex)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_kron_identity_and_diag():
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    assert np.array_equal(kron(SZ, np.eye(2)), np.diag([1, 1, -1, -1]))


@given(seeds)
def test_kron_mixed_product(seed):
    rng = np.random.default_rng(seed)
    a, b, c, d = (random_complex(rng, 2, 2) for _ in range(4))
    assert np.allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d), atol=1e-12)


def test_vectorize_convention():
    e01 = np.array([[0, 1], [0, 0]], dtype=complex)
    v = vectorize(e01)
    assert v[2] == 1 and np.count_nonzero(v) == 1


@given(seeds, st.integers(min_value=1, max_value=5))
def test_vectorize_roundtrip_bitwise(seed, d):
    x = random_complex(np.random.default_rng(seed), d, d)
    assert np.array_equal(devectorize(vectorize(x), d), x)


@settings(max_examples=100)
@given(seeds)
def test_vec_identity(seed):
    rng = np.random.default_rng(seed)
    a, x, b = (random_complex(rng, 3, 3) for _ in range(3))
    assert np.max(np.abs(np.kron(b.T, a) @ vectorize(x) - vectorize(a @ x @ b))) < 1e-12


def test_devectorize_bad_length():
    with pytest.raises(ValidationError):
        devectorize(np.zeros(5))


def test_commutator_examples():
    assert np.array_equal(commutator_superop(np.eye(2)), np.zeros((4, 4)))
    assert np.allclose(apply(commutator_superop(SZ), SX), 2 * SY)
    rho = np.diag([0.3, 0.7])
    assert np.allclose(apply(commutator_superop(SZ), rho), 0)


def test_commutator_rejects_non_hermitian():
    with pytest.raises(ValidationError, match="not Hermitian"):
        commutator_superop(np.array([[0, 1], [0, 0]]))


def test_dissipator_examples():
    rho = np.diag([0.25, 0.75]).astype(complex)
    assert np.allclose(apply(dissipator_superop(np.eye(2), 1.3), rho), 0)
    g = 0.7
    out = apply(dissipator_superop(fock_annihilation(2), g), np.diag([0.0, 1.0]))
    assert np.allclose(out, g * np.diag([1.0, -1.0]))
    with pytest.raises(ValidationError):
        dissipator_superop(SX, -1.0)


@given(seeds)
def test_generators_traceless_hermitian(seed):
    rng = np.random.default_rng(seed)
    h = random_complex(rng, 3, 3)
    h = h + h.conj().T
    a = random_complex(rng, 3, 3)
    rho = random_complex(rng, 3, 3)
    rho = rho + rho.conj().T
    for s in (commutator_superop(h), dissipator_superop(a, 0.8)):
        out = apply(s, rho)
        assert abs(np.trace(out)) < 1e-12
        assert np.max(np.abs(out - out.conj().T)) < 1e-12


def test_partial_trace_examples(rng):
    rs, rb = random_density(rng, 2), random_density(rng, 3)
    space = TensorSpace((2, 3))
    assert np.max(np.abs(partial_trace(np.kron(rs, rb), space, 0) - rs)) < 1e-12
    assert np.max(np.abs(partial_trace(np.kron(rs, rb), space, 1) - rb)) < 1e-12
    psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    bell = np.outer(psi, psi)
    for keep in (0, 1):
        assert np.allclose(partial_trace(bell, (2, 2), keep), np.eye(2) / 2)
    x = random_density(rng, 6)
    assert np.isclose(np.trace(partial_trace(x, space, 0)), np.trace(x))


def test_partial_trace_brute_force(rng):
    x = random_complex(rng, 6, 6)
    out = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[i, j] = sum(x[i * 3 + b, j * 3 + b] for b in range(3))
    assert np.allclose(partial_trace(x, (2, 3), 0), out)


def test_expectation_examples():
    rho = np.diag([1.0, 0.0])
    assert expectation(np.eye(2), rho) == 1
    assert expectation(np.diag([1.0, 0.0]), rho) == 1
    n = np.diag(np.arange(30.0))
    assert abs(expectation(n, thermal_state(30, 0.5)) - 0.5) < 1e-6


def test_trace_distance_examples():
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    assert trace_distance(p0, p0) == 0
    assert np.isclose(trace_distance(p0, p1), 1)
    assert np.isclose(trace_distance(p0, np.eye(2) / 2), 0.5)


def test_density_validation_does_not_repair():
    with pytest.raises(ValidationError, match="trace"):
        check_density_matrix(np.diag([0.5, 0.6]))
    with pytest.raises(ValidationError, match="negative eigenvalue"):
        check_density_matrix(np.diag([1.1, -0.1]))
    with pytest.raises(ValidationError, match="Hermitian"):
        check_density_matrix(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(ValidationError, match="non-finite"):
        check_density_matrix(np.array([[np.nan, 0], [0, 1]]))


def test_superop_from_map_and_restrict(rng):
    a = random_complex(rng, 3, 3)
    s = superop_from_map(lambda x: a @ x - x @ a, 3)
    x = random_complex(rng, 3, 3)
    assert np.allclose(apply(s, x), a @ x - x @ a)
    block = restrict_superop(s, (0, 2))
    y = np.zeros((3, 3), dtype=complex)
    y[np.ix_((0, 2), (0, 2))] = x[:2, :2]
    full = apply(s, y)[np.ix_((0, 2), (0, 2))]
    assert np.allclose(devectorize(block @ vectorize(x[:2, :2]), 2), full)


def test_tensor_space_validation():
    assert TensorSpace((2, 3)).total == 6
    with pytest.raises(ValidationError):
        TensorSpace((2, 0))

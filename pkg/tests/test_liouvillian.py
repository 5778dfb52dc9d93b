import numpy as np
import pytest

from conftest import random_complex, random_density
from nzkit.errors import ValidationError
from nzkit.liouvillian import (
    LindbladTerm,
    LiouvillianSpec,
    OscillatoryPiece,
    assemble_static,
    build_projector,
    check_structure,
    evaluate_at,
    generator_residual,
    projector_residuals,
)
from nzkit.models import (
    build_lambda,
    build_optomech,
    fock_annihilation,
    random_bipartite,
    thermal_state,
)
from nzkit.reductions import LambdaParams, OptomechParams
from nzkit.superop import (
    TensorSpace,
    apply,
    commutator_superop,
    devectorize,
    dissipator_superop,
    raw_commutator_superop,
    vectorize,
)

LOWER = fock_annihilation(2)


def test_assemble_static_examples(rng):
    assert np.array_equal(assemble_static(np.zeros((2, 2))), np.zeros((4, 4)))
    g = 0.6
    s = assemble_static(np.zeros((2, 2)), [LindbladTerm(LOWER, g)])
    ev = np.sort(np.linalg.eigvals(s).real)
    assert np.allclose(ev, [-g, -g / 2, -g / 2, 0])
    h = random_complex(rng, 3, 3)
    s = assemble_static(h + h.conj().T, [LindbladTerm(random_complex(rng, 3, 3), 0.4)])
    assert np.max(np.abs(vectorize(np.eye(3)).conj() @ s)) < 1e-12


def test_assemble_static_factor_embedding():
    space = TensorSpace((2, 3))
    s = assemble_static(np.zeros((6, 6)), [LindbladTerm(LOWER, 1.0, factor=0)], space)
    expected = dissipator_superop(np.kron(LOWER, np.eye(3)), 1.0)
    assert np.allclose(s, expected)
    with pytest.raises(ValidationError):
        assemble_static(np.zeros((6, 6)), [LindbladTerm(LOWER, 1.0, factor=0)])
    with pytest.raises(ValidationError):
        LindbladTerm(LOWER, -0.1)


def _periodic_spec(rng, w=1.7):
    o = random_complex(rng, 2, 2)
    return LiouvillianSpec(2, {"system": commutator_superop(np.diag([0.3, -0.3]))}, (
        OscillatoryPiece(raw_commutator_superop(o), w),
        OscillatoryPiece(raw_commutator_superop(o.conj().T), -w),
    )), w


def test_evaluate_at_examples(rng):
    spec, w = _periodic_spec(rng)
    assert np.allclose(evaluate_at(spec, 0.0),
                       spec.static_part + sum(p.superop for p in spec.pieces))
    t = 0.37
    assert np.allclose(evaluate_at(spec, t), evaluate_at(spec, t + 2 * np.pi / w))
    static = LiouvillianSpec(2, {"system": commutator_superop(np.diag([1.0, 0.0]))})
    assert np.array_equal(evaluate_at(static, 5.0), static.static_part)
    # conjugate-paired pieces give a valid generator at any time
    for t in rng.uniform(0, 10, 5):
        assert generator_residual(evaluate_at(spec, t)) < 1e-10


def test_spec_rejects_bad_labels_and_shapes():
    with pytest.raises(ValidationError, match="unknown Liouvillian label"):
        LiouvillianSpec(2, {"environment": np.zeros((4, 4))})
    with pytest.raises(ValidationError, match="shape"):
        LiouvillianSpec(2, {"system": np.zeros((9, 9))})


@pytest.mark.parametrize("dims", [(2, 2), (2, 3), (3, 4)])
def test_projector_identities_random_bath(rng, dims):
    for _ in range(7):
        proj = build_projector(random_density(rng, dims[1]), TensorSpace(dims))
        assert max(projector_residuals(proj).values()) < 1e-12


def test_projector_examples(rng):
    space = TensorSpace((2, 3))
    rb = random_density(rng, 3)
    proj = build_projector(rb, space)
    state = np.kron(random_density(rng, 2), rb)
    assert np.allclose(apply(proj.p, state), state, atol=1e-14)
    x = random_complex(rng, 6, 6)
    assert np.isclose(np.trace(apply(proj.p, x)), np.trace(x))
    with pytest.raises(ValidationError):
        build_projector(random_density(rng, 2), space)


def test_check_structure_example_models():
    lam = build_lambda(LambdaParams(1.0, 0.5j, 0.1, 30.0))
    rep = check_structure(lam.spec, build_projector(lam.bath_state, lam.space))
    assert rep.max() < 1e-12
    opt = build_optomech(OptomechParams(10, 10, 1, 1e-3, 1.0, 0.05, n_cav=3, n_mech=4))
    for spec in (opt.spec_schrodinger, opt.spec_interaction):
        rep = check_structure(spec, build_projector(opt.bath_state, opt.space))
        assert rep.max() < 1e-12


def test_check_structure_negative_control():
    p = OptomechParams(10, 0.0, 1, 1e-3, 1.0, 0.05, n_cav=3, n_mech=3)
    with pytest.warns(UserWarning, match="cutoff"):
        opt = build_optomech(p)
    # thermal cavity is not stationary under pure decay
    rep = check_structure(opt.spec_schrodinger,
                          build_projector(thermal_state(3, 0.5), opt.space))
    assert rep.bath_stationarity > 1e-3
    assert rep.bath_right > 1e-3


def test_check_structure_missing_label():
    spec = LiouvillianSpec(4, {"system": np.zeros((16, 16))}, (), TensorSpace((2, 2)))
    with pytest.raises(ValidationError, match="missing"):
        check_structure(spec, build_projector(np.eye(2) / 2, TensorSpace((2, 2))))


def test_model_specs_are_valid_generators(rng):
    lam = build_lambda(LambdaParams(1.0, 2.0, 0.0, 40.0))
    opt = build_optomech(OptomechParams(10, 10, 1, 1e-3, 1.0, 0.05 + 0.01j, n_cav=3, n_mech=4))
    bip = random_bipartite(3)
    for spec in (lam.spec, opt.spec_schrodinger, opt.spec_interaction, bip.spec):
        d = spec.hilbert_dim
        for t in rng.uniform(0, 10, 10):
            out = devectorize(evaluate_at(spec, t) @ vectorize(random_density(rng, d)), d)
            assert abs(np.trace(out)) < 1e-10
            assert np.max(np.abs(out - out.conj().T)) < 1e-10

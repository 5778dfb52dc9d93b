"""The worked examples as ready-to-integrate Liouvillians, plus Fock-space helpers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .liouvillian import LiouvillianSpec, OscillatoryPiece, embed_operator
from .reductions import (
    InteractionPiece,
    InteractionSpec,
    LambdaParams,
    OptomechParams,
    steady_occupation,
)
from .superop import (
    TensorSpace,
    commutator_superop,
    dissipator_superop,
    raw_commutator_superop,
)


def fock_annihilation(n: int) -> np.ndarray:
    """Truncated lowering operator with ``<k-1|a|k> = sqrt(k)``."""
    if n < 2:
        raise ValidationError(f"Fock cutoff must be >= 2, got {n}")
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def thermal_state(n: int, nbar: float) -> np.ndarray:
    if n < 2:
        raise ValidationError(f"Fock cutoff must be >= 2, got {n}")
    if nbar < 0:
        raise ValidationError(f"thermal occupation must be non-negative, got {nbar}")
    if nbar == 0:
        w = np.zeros(n)
        w[0] = 1.0
    else:
        w = (nbar / (nbar + 1)) ** np.arange(n)
        w = w / w.sum()
    return np.diag(w).astype(complex)


def basis_projector(n: int, k: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=complex)
    out[k, k] = 1.0
    return out


# -- Lambda system --------------------------------------------------------------------

# Indices of the embedded space (system {a, b, 0} x bath {0_e, e}) that hold the
# physical states |a>, |b>, |e>.
LAMBDA_PHYSICAL = (0, 2, 5)
LAMBDA_GROUND_BLOCK = (0, 1)


@dataclass(frozen=True, eq=False)
class LambdaModel:
    """Lambda system in two representations.

    ``h_full`` is the physical 3x3 rotating-frame Hamiltonian (basis
    ``|a>, |b>, |e>``) used for exact integration. The reduction works on an
    auxiliary product space: the system factor spans ``{|a>, |b>, |0>}``
    (``|0>`` is the empty ground manifold) and the bath factor spans
    ``{|0_e>, |e>}``. ``spec`` is the labelled Liouvillian on that 6-dim
    space; its physical subspace is :data:`LAMBDA_PHYSICAL`.
    """

    params: LambdaParams
    h_full: np.ndarray
    h_s: np.ndarray
    h_s_embedded: np.ndarray
    interaction: InteractionSpec
    bath_state: np.ndarray
    lb: np.ndarray
    spec: LiouvillianSpec
    space: TensorSpace


def build_lambda(p: LambdaParams) -> LambdaModel:
    if not p.adiabatic:
        warnings.warn("Lambda parameters are outside the adiabatic regime "
                      "(|bigdelta| < 10 max(|delta|, |omega_j|))", stacklevel=2)
    oa, ob = p.omega_a, p.omega_b
    h_full = np.diag([-p.delta / 2, p.delta / 2, p.bigdelta]).astype(complex)
    h_full[2, 0] = oa / 2
    h_full[2, 1] = ob / 2
    h_full[0, 2] = np.conj(oa) / 2
    h_full[1, 2] = np.conj(ob) / 2

    h_s = np.diag([-p.delta / 2, p.delta / 2]).astype(complex)
    h_s3 = np.diag([-p.delta / 2, p.delta / 2, 0.0]).astype(complex)
    # global jump |j> -> |0> weighted by the drive
    jump = np.zeros((3, 3), dtype=complex)
    jump[2, 0] = oa / 2
    jump[2, 1] = ob / 2
    e_raise = np.array([[0, 0], [1, 0]], dtype=complex)
    interaction = InteractionSpec((
        InteractionPiece(jump, e_raise, 0.0),
        InteractionPiece(jump.conj().T, e_raise.conj().T, 0.0),
    ))
    h_b = np.diag([0.0, p.bigdelta]).astype(complex)
    lb = commutator_superop(h_b)
    bath_state = np.diag([1.0, 0.0]).astype(complex)

    space = TensorSpace((3, 2))
    parts = {
        "system": commutator_superop(np.kron(h_s3, np.eye(2))),
        "bath": commutator_superop(np.kron(np.eye(3), h_b)),
        "interaction": commutator_superop(interaction.operator_at(0.0)),
    }
    spec = LiouvillianSpec(6, parts, (), space)
    return LambdaModel(p, h_full, h_s, h_s3, interaction, bath_state, lb, spec, space)


# -- optomechanical cooling -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OptomechModel:
    """Linearized optomechanical system, mechanics first, cavity second.

    ``spec_schrodinger`` is static in the frame rotating at the drive;
    ``spec_interaction`` is in the interaction picture of the free
    mechanical Hamiltonian, with interaction pieces at ``+-omega_m``.
    """

    params: OptomechParams
    spec_schrodinger: LiouvillianSpec
    spec_interaction: LiouvillianSpec
    ops: dict[str, np.ndarray]
    space: TensorSpace
    interaction: InteractionSpec
    lb: np.ndarray
    ls_dissipative: np.ndarray
    bath_state: np.ndarray


def build_optomech(p: OptomechParams) -> OptomechModel:
    nm, nc = int(p.n_mech), int(p.n_cav)
    space = TensorSpace((nm, nc))
    b = fock_annihilation(nm)
    a = fock_annihilation(nc)
    bd, ad = b.conj().T, a.conj().T
    qa = p.g * a + np.conj(p.g) * ad

    b_full = embed_operator(b, space, 0)
    a_full = embed_operator(a, space, 1)
    nb_full = b_full.conj().T @ b_full
    na_full = a_full.conj().T @ a_full

    mech_diss = (dissipator_superop(b_full.conj().T, p.gamma_m * p.nbar)
                 + dissipator_superop(b_full, p.gamma_m * (p.nbar + 1)))
    bath = commutator_superop(p.delta * na_full) + dissipator_superop(a_full, p.kappa)
    coupling = commutator_superop(np.kron(b + bd, qa))

    spec_s = LiouvillianSpec(nm * nc, {
        "system": commutator_superop(p.omega_m * nb_full) + mech_diss,
        "bath": bath,
        "interaction": coupling,
    }, (), space)
    spec_i = LiouvillianSpec(nm * nc, {"system": mech_diss, "bath": bath}, (
        OscillatoryPiece(raw_commutator_superop(np.kron(b, qa)), -p.omega_m, "interaction"),
        OscillatoryPiece(raw_commutator_superop(np.kron(bd, qa)), p.omega_m, "interaction"),
    ), space)

    interaction = InteractionSpec((
        InteractionPiece(b, qa, -p.omega_m),
        InteractionPiece(bd, qa, p.omega_m),
    ))
    lb = commutator_superop(p.delta * ad @ a) + dissipator_superop(a, p.kappa)
    ls_diss = (dissipator_superop(bd, p.gamma_m * p.nbar)
               + dissipator_superop(b, p.gamma_m * (p.nbar + 1)))
    bath_state = thermal_state(nc, 0.0)

    try:
        occ = steady_occupation(p)
    except NumericalError:
        occ = None  # unstable; the caller decides what to do with it
    if occ is not None and occ + 5 * np.sqrt(occ) > nm / 2:
        warnings.warn(f"mechanical cutoff {nm} may truncate the predicted occupation "
                      f"{occ:.3g}", stacklevel=2)

    ops = {"b": b_full, "a": a_full, "n_mech": nb_full, "n_cav": na_full,
           "b_mech": b, "a_cav": a}
    return OptomechModel(p, spec_s, spec_i, ops, space, interaction, lb, ls_diss, bath_state)


# -- random bipartite models ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BipartiteModel:
    """System (x) damped bath with a static interaction.

    ``mean`` is the bath-averaged coupling ``Tr_B[rho_B V]``. It is booked
    under the system part of ``spec``, and ``interaction`` holds the
    remainder ``V - mean (x) 1``.
    """

    h_s: np.ndarray
    h_b: np.ndarray
    v: np.ndarray
    bath_jump: np.ndarray
    bath_decay: float
    space: TensorSpace
    lb: np.ndarray
    bath_state: np.ndarray
    spec: LiouvillianSpec
    interaction: InteractionSpec
    mean: np.ndarray


def random_hermitian(rng: np.random.Generator, n: int, norm: float) -> np.ndarray:
    """Entrywise Gaussian draw, symmetrized and rescaled to the given spectral norm."""
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = (m + m.conj().T) / 2
    scale = np.linalg.norm(h, 2)
    return h * (norm / scale) if scale > 0 else h


def build_bipartite(h_s, h_b, v, bath_decay: float, space: TensorSpace | None = None
                    ) -> BipartiteModel:
    from .dynamics import steady_state

    ds, db = h_s.shape[0], h_b.shape[0]
    space = space or TensorSpace((ds, db))
    jump = fock_annihilation(db) if db > 1 else np.zeros((1, 1), dtype=complex)
    lb = commutator_superop(h_b) + dissipator_superop(jump, bath_decay)
    rho_b = steady_state(lb)
    # bath-averaged coupling is booked under the system so that P L_Int P = 0
    mean = np.einsum("iajb,ba->ij", v.reshape(ds, db, ds, db), rho_b)
    mean = (mean + mean.conj().T) / 2
    eye_b = np.eye(db)
    inter = InteractionSpec.from_operator(v - np.kron(mean, eye_b), space)
    spec = LiouvillianSpec(ds * db, {
        "system": commutator_superop(np.kron(h_s + mean, eye_b)),
        "bath": commutator_superop(np.kron(np.eye(ds), h_b))
        + dissipator_superop(np.kron(np.eye(ds), jump), bath_decay),
        "interaction": commutator_superop(v - np.kron(mean, eye_b)),
    }, (), space)
    return BipartiteModel(h_s, h_b, v, jump, bath_decay, space, lb, rho_b, spec, inter, mean)


def random_bipartite(seed: int, coupling: float = 1.0, bath_decay: float = 1.0,
                     dims: tuple[int, int] = (2, 2), system_norm: float = 1.0,
                     bath_norm: float = 1.0) -> BipartiteModel:
    """Seeded random model: ``||H_S|| = system_norm``, ``||H_B|| = bath_norm``,
    ``||V|| = coupling`` (spectral norms), bath lowering at ``bath_decay``."""
    rng = np.random.default_rng(seed)
    ds, db = dims
    h_s = random_hermitian(rng, ds, system_norm)
    h_b = random_hermitian(rng, db, bath_norm)
    v = random_hermitian(rng, ds * db, coupling)
    return build_bipartite(h_s, h_b, v, bath_decay, TensorSpace((ds, db)))

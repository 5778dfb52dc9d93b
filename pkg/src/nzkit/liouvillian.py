"""Liouvillian assembly, product-state projectors and their structural identities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .superop import (
    TensorSpace,
    _square,
    check_density_matrix,
    check_hermitian,
    commutator_superop,
    dissipator_superop,
    hilbert_dim,
)

LABELS = ("system", "bath", "interaction")


@dataclass(frozen=True, eq=False)
class LindbladTerm:
    """A jump operator with its rate.

    If ``factor`` is given the jump acts on that factor of a composite space
    and is embedded with identities when assembled.
    """

    jump: np.ndarray
    rate: float
    factor: int | None = None

    def __post_init__(self):
        if self.rate < 0:
            raise ValidationError(f"dissipation rate must be non-negative, got {self.rate}")
        object.__setattr__(self, "jump", _square(self.jump, "jump operator"))


@dataclass(frozen=True, eq=False)
class OscillatoryPiece:
    """``superop * exp(1j * freq * t)``, tagged with the part of the Liouvillian it belongs to."""

    superop: np.ndarray
    freq: float
    label: str = "interaction"


@dataclass(frozen=True, eq=False)
class LiouvillianSpec:
    """A Liouvillian ``L(t) = sum(parts) + sum_k S_k exp(i w_k t)``.

    ``parts`` maps a label (``system``, ``bath``, ``interaction``) to the
    static superoperator of that contribution; ``pieces`` carry the
    oscillating contributions with their own labels.
    """

    hilbert_dim: int
    parts: Mapping[str, np.ndarray]
    pieces: tuple[OscillatoryPiece, ...] = ()
    space: TensorSpace | None = None

    def __post_init__(self):
        n = self.hilbert_dim ** 2
        for label, s in self.parts.items():
            if label not in LABELS:
                raise ValidationError(f"unknown Liouvillian label {label!r}")
            if s.shape != (n, n):
                raise ValidationError(
                    f"{label} part has shape {s.shape}, expected {(n, n)}")
        for p in self.pieces:
            if p.label not in LABELS:
                raise ValidationError(f"unknown Liouvillian label {p.label!r}")
            if p.superop.shape != (n, n):
                raise ValidationError(
                    f"piece at frequency {p.freq} has shape {p.superop.shape}")
        if self.space is not None and self.space.total != self.hilbert_dim:
            raise ValidationError("space does not match hilbert_dim")
        object.__setattr__(self, "parts", dict(self.parts))
        object.__setattr__(self, "pieces", tuple(self.pieces))

    @classmethod
    def from_superop(cls, s: np.ndarray, label: str = "system") -> "LiouvillianSpec":
        return cls(hilbert_dim(s), {label: s})

    @property
    def static_part(self) -> np.ndarray:
        n = self.hilbert_dim ** 2
        out = np.zeros((n, n), dtype=complex)
        for s in self.parts.values():
            out += s
        return out

    @property
    def is_static(self) -> bool:
        return not self.pieces

    def part(self, label: str) -> np.ndarray:
        n = self.hilbert_dim ** 2
        return self.parts.get(label, np.zeros((n, n), dtype=complex))

    def pieces_for(self, label: str) -> list[OscillatoryPiece]:
        return [p for p in self.pieces if p.label == label]

    def has_label(self, label: str) -> bool:
        return label in self.parts or any(p.label == label for p in self.pieces)


def embed_operator(op, space: TensorSpace, factor: int) -> np.ndarray:
    """Lift an operator on one factor to the whole space."""
    op = _square(op)
    if not 0 <= factor < len(space.dims):
        raise ValidationError(f"invalid factor index {factor}")
    if op.shape[0] != space.dims[factor]:
        raise ValidationError(
            f"operator dimension {op.shape[0]} does not match factor {factor} "
            f"of space {space.dims}")
    out = np.ones((1, 1), dtype=complex)
    for k, d in enumerate(space.dims):
        out = np.kron(out, op if k == factor else np.eye(d))
    return out


def assemble_static(h, terms: Sequence[LindbladTerm] = (), space: TensorSpace | None = None
                    ) -> np.ndarray:
    """``-i[h, .] + sum_k rate_k D[jump_k]``."""
    h = check_hermitian(h, "Hamiltonian")
    d = h.shape[0]
    out = commutator_superop(h)
    for term in terms:
        jump = term.jump
        if term.factor is not None:
            if space is None:
                raise ValidationError("factor-space jump given without a TensorSpace")
            jump = embed_operator(jump, space, term.factor)
        if jump.shape[0] != d:
            raise ValidationError(
                f"jump dimension {jump.shape[0]} does not match Hamiltonian dimension {d}")
        out = out + dissipator_superop(jump, term.rate)
    return out


def evaluate_at(spec: LiouvillianSpec, t: float) -> np.ndarray:
    out = spec.static_part
    for p in spec.pieces:
        out = out + np.exp(1j * p.freq * t) * p.superop
    return out


def generator_residual(s: np.ndarray) -> float:
    """How far ``s`` is from preserving trace and Hermiticity (0 for a valid generator).

    Uses exact matrix identities rather than random probes: the vectorized
    identity is a left null vector, and ``s`` commutes with ``X -> X^dag``.
    """
    d = hilbert_dim(s)
    trace_row = np.eye(d).reshape(-1, order="F")
    r_trace = np.max(np.abs(trace_row @ s)) if s.size else 0.0
    # permutation taking vec(X) to vec(X^T)
    perm = np.arange(d * d).reshape(d, d).T.reshape(-1)
    r_herm = np.max(np.abs(s[perm][:, perm] - s.conj())) if s.size else 0.0
    return float(max(r_trace, r_herm))


@dataclass(frozen=True, eq=False)
class ProjectorPair:
    """``P = embed @ trace`` and ``Q = I - P``; the thin factors are kept for cheap products."""

    p: np.ndarray
    q: np.ndarray
    bath_state: np.ndarray
    space: TensorSpace
    embed: np.ndarray | None = None
    trace: np.ndarray | None = None


def partial_trace_superop(space: TensorSpace) -> np.ndarray:
    """``(d_S**2, d**2)`` matrix of ``X -> Tr_B X``."""
    ds, db = space.dims
    d = ds * db
    s, s2, b = np.meshgrid(np.arange(ds), np.arange(ds), np.arange(db), indexing="ij")
    rows = (s + s2 * ds).ravel()
    cols = ((s * db + b) + (s2 * db + b) * d).ravel()
    out = np.zeros((ds * ds, d * d), dtype=complex)
    out[rows, cols] = 1.0
    return out


def embedding_superop(bath_state, space: TensorSpace) -> np.ndarray:
    """``(d**2, d_S**2)`` matrix of ``sigma -> sigma (x) bath_state``."""
    ds, db = space.dims
    d = ds * db
    rho_b = np.asarray(bath_state, dtype=complex)
    s, s2, b, b2 = np.meshgrid(np.arange(ds), np.arange(ds), np.arange(db), np.arange(db),
                               indexing="ij")
    rows = ((s * db + b) + (s2 * db + b2) * d).ravel()
    cols = (s + s2 * ds).ravel()
    out = np.zeros((d * d, ds * ds), dtype=complex)
    out[rows, cols] = rho_b[b, b2].ravel()
    return out


def build_projector(bath_state, space: TensorSpace) -> ProjectorPair:
    """``P X = Tr_B[X] (x) bath_state`` and its complement ``Q = I - P``."""
    if len(space.dims) != 2:
        raise ValidationError("projector needs a bipartite space")
    rho_b = check_density_matrix(bath_state, "bath state")
    if rho_b.shape[0] != space.dims[1]:
        raise ValidationError(
            f"bath state dimension {rho_b.shape[0]} does not match bath factor {space.dims[1]}")
    embed = embedding_superop(rho_b, space)
    trace = partial_trace_superop(space)
    p = embed @ trace
    q = np.eye(p.shape[0], dtype=complex) - p
    return ProjectorPair(p=p, q=q, bath_state=rho_b, space=space, embed=embed, trace=trace)


@dataclass(frozen=True)
class StructureReport:
    """Max-entry residuals of the projector identities for one Liouvillian.

    ``system_commutator`` is ``[L_S, P]``, ``bath_right`` is ``L_B P``,
    ``bath_left`` is ``P L_B``, ``interaction_pp`` is ``P L_Int P`` (worst
    over static and oscillating parts) and ``bath_stationarity`` is
    ``L_B`` applied to the reference bath state.
    """

    system_commutator: float
    bath_right: float
    bath_left: float
    interaction_pp: float
    bath_stationarity: float

    def max(self) -> float:
        return max(self.as_dict().values())

    def as_dict(self) -> dict[str, float]:
        return {
            "system_commutator": self.system_commutator,
            "bath_right": self.bath_right,
            "bath_left": self.bath_left,
            "interaction_pp": self.interaction_pp,
            "bath_stationarity": self.bath_stationarity,
        }


def _maxabs(a) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def check_structure(spec: LiouvillianSpec, proj: ProjectorPair) -> StructureReport:
    """Residuals of ``L_S P = P L_S``, ``L_B P = 0 = P L_B`` and ``P L_Int P = 0``.

    Residuals are reported, never raised: a non-stationary reference state
    is a legitimate thing to inspect.
    """
    missing = [lab for lab in LABELS if not spec.has_label(lab)]
    if missing:
        raise ValidationError(f"Liouvillian is missing labels {missing}")
    if spec.pieces_for("bath"):
        raise ValidationError("time-dependent bath Liouvillians are not supported")
    if proj.p.shape[0] != spec.hilbert_dim ** 2:
        raise ValidationError("projector and Liouvillian dimensions differ")
    if proj.embed is not None and proj.trace is not None:
        e, tr = proj.embed, proj.trace
    else:
        e, tr = proj.p, np.eye(proj.p.shape[0])
    # products with P = e @ tr go through the thin factors

    ls = [spec.part("system")] + [x.superop for x in spec.pieces_for("system")]
    r_s = max(_maxabs((s @ e) @ tr - e @ (tr @ s)) for s in ls)

    lb = spec.part("bath")
    r_bp = _maxabs((lb @ e) @ tr)
    r_pb = _maxabs(e @ (tr @ lb))

    li = [spec.part("interaction")] + [x.superop for x in spec.pieces_for("interaction")]
    r_i = max(_maxabs(e @ (tr @ s @ e) @ tr) for s in li)

    ds, db = proj.space.dims
    probe = np.kron(np.eye(ds) / ds, proj.bath_state)
    r_stat = _maxabs(lb @ probe.reshape(-1, order="F"))
    return StructureReport(r_s, r_bp, r_pb, r_i, r_stat)


def projector_residuals(proj: ProjectorPair) -> dict[str, float]:
    """Idempotence, orthogonality and completeness residuals of a projector pair."""
    p, q = proj.p, proj.q
    eye = np.eye(p.shape[0])
    return {
        "pp_minus_p": _maxabs(p @ p - p),
        "qq_minus_q": _maxabs(q @ q - q),
        "pq": _maxabs(p @ q),
        "qp": _maxabs(q @ p),
        "p_plus_q_minus_i": _maxabs(p + q - eye),
    }

"""Reduced system generators from second-order projections.

The bath-induced part of every reduction here has the same shape,

    R rho = sum_{k,k'} Tr_B[ C_k  (-(L_B - i w_k')^{-1})  Q  C_k' (rho_B (x) rho) ]

with ``C_k = -i[S_k (x) B_k, .]`` the commutator of one interaction piece
and ``w_k'`` the frequency of the inner piece. The time integral of the bath
propagator is taken in closed form as a resolvent, which covers a strongly
damped bath and a far-detuned lossless one alike. With the secular filter
on, only pairs with ``w_k + w_k' = 0`` survive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import NumericalError, ValidationError
from .liouvillian import LiouvillianSpec, OscillatoryPiece
from .superop import (
    TensorSpace,
    _square,
    check_density_matrix,
    commutator_superop,
    dissipator_superop,
    hilbert_dim,
    raw_commutator_superop,
)

FREQ_TOL = 1e-9
RESOLVENT_COND_MAX = 1e12
PLP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class InteractionPiece:
    system_op: np.ndarray
    bath_op: np.ndarray
    freq: float = 0.0


@dataclass(frozen=True, eq=False)
class InteractionSpec:
    """``V(t) = sum_k S_k (x) B_k exp(i w_k t)``; must be Hermitian at all times."""

    pieces: tuple[InteractionPiece, ...]

    def __post_init__(self):
        pieces = tuple(
            InteractionPiece(_square(p.system_op, "system operator"),
                             _square(p.bath_op, "bath operator"), float(p.freq))
            for p in self.pieces)
        object.__setattr__(self, "pieces", pieces)
        if pieces:
            ds, db = pieces[0].system_op.shape[0], pieces[0].bath_op.shape[0]
            for p in pieces:
                if p.system_op.shape[0] != ds or p.bath_op.shape[0] != db:
                    raise ValidationError("interaction pieces have inconsistent dimensions")
            self._check_hermitian()

    @property
    def dims(self) -> tuple[int, int]:
        if not self.pieces:
            raise ValidationError("empty interaction has no dimensions")
        p = self.pieces[0]
        return p.system_op.shape[0], p.bath_op.shape[0]

    def frequencies(self) -> list[float]:
        out: list[float] = []
        for p in self.pieces:
            if not any(abs(p.freq - w) <= FREQ_TOL for w in out):
                out.append(p.freq)
        return out

    def operator_for(self, freq: float) -> np.ndarray:
        """Sum of ``S_k (x) B_k`` over pieces oscillating at ``freq``."""
        ds, db = self.dims
        out = np.zeros((ds * db, ds * db), dtype=complex)
        for p in self.pieces:
            if abs(p.freq - freq) <= FREQ_TOL:
                out += np.kron(p.system_op, p.bath_op)
        return out

    def operator_at(self, t: float) -> np.ndarray:
        ds, db = self.dims
        out = np.zeros((ds * db, ds * db), dtype=complex)
        for p in self.pieces:
            out += np.exp(1j * p.freq * t) * np.kron(p.system_op, p.bath_op)
        return out

    def _check_hermitian(self, tol: float = 1e-10):
        for w in self.frequencies():
            a = self.operator_for(w)
            b = self.operator_for(-w)
            res = float(np.max(np.abs(a - b.conj().T)))
            if res > tol:
                raise ValidationError(
                    f"interaction is not Hermitian: frequency {w} has no conjugate "
                    f"partner (residual {res:.3e})")

    def scaled(self, factor: float) -> "InteractionSpec":
        return InteractionSpec(tuple(
            InteractionPiece(p.system_op, factor * p.bath_op, p.freq) for p in self.pieces))

    def liouvillian(self, space: TensorSpace | None = None) -> LiouvillianSpec:
        """The interaction as a labelled Liouvillian: ``-i[V(t), .]`` grouped by frequency."""
        ds, db = self.dims
        static = {}
        pieces = []
        for w in self.frequencies():
            s = raw_commutator_superop(self.operator_for(w))
            if abs(w) <= FREQ_TOL:
                static["interaction"] = s
            else:
                pieces.append(OscillatoryPiece(s, w, "interaction"))
        return LiouvillianSpec(ds * db, static, tuple(pieces), space)

    @classmethod
    def from_operator(cls, v, space: TensorSpace) -> "InteractionSpec":
        """Split a static Hermitian operator into matrix units on S times bath blocks."""
        v = _square(v, "interaction")
        ds, db = space.dims
        if v.shape[0] != ds * db:
            raise ValidationError("interaction dimension does not match space")
        blocks = v.reshape(ds, db, ds, db)
        pieces = []
        for i in range(ds):
            for j in range(ds):
                b = blocks[i, :, j, :]
                if np.any(b != 0):
                    unit = np.zeros((ds, ds), dtype=complex)
                    unit[i, j] = 1.0
                    pieces.append(InteractionPiece(unit, b.copy(), 0.0))
        return cls(tuple(pieces))


@dataclass(frozen=True, eq=False)
class ReducedGenerator:
    """A system-space generator produced by a reduction.

    ``generator`` is the time-independent part; ``pieces`` hold any
    oscillating remainder kept when the secular filter is off.
    """

    generator: np.ndarray
    method: str
    rates: dict[str, float] = field(default_factory=dict)
    pieces: tuple[OscillatoryPiece, ...] = ()

    @property
    def hilbert_dim(self) -> int:
        return hilbert_dim(self.generator)

    def as_spec(self, system=None) -> LiouvillianSpec:
        """Reduced Liouvillian, optionally adding an intrinsic system part."""
        parts = {"system": self.generator if system is None else system + self.generator}
        return LiouvillianSpec(self.hilbert_dim, parts, self.pieces)


def mean_field_split(v: InteractionSpec, bath_state):
    """Move the bath-averaged part of the interaction into the system.

    Returns ``(shift, vprime)`` where ``shift`` is a list of
    ``(system operator, frequency)`` pairs, one per distinct frequency, with
    ``shift_w = sum_k S_k <B_k>``, and ``vprime`` uses ``B_k - <B_k>``, so
    that ``Tr_B[rho_B V'(t)] = 0``.
    """
    rho_b = check_density_matrix(bath_state, "bath state")
    ds, db = v.dims
    if rho_b.shape[0] != db:
        raise ValidationError("bath state does not match interaction bath dimension")
    means = [complex(np.trace(rho_b @ p.bath_op)) for p in v.pieces]
    shift = []
    for w in v.frequencies():
        op = np.zeros((ds, ds), dtype=complex)
        for p, m in zip(v.pieces, means):
            if abs(p.freq - w) <= FREQ_TOL:
                op += m * p.system_op
        shift.append((op, w))
    vprime = InteractionSpec(tuple(
        InteractionPiece(p.system_op, p.bath_op - m * np.eye(db), p.freq)
        for p, m in zip(v.pieces, means)))
    return shift, vprime


class _Resolvent:
    """Applies ``-(z)^{-1}`` for ``z = L_B - i w`` on column-stacked bath matrices.

    A well-conditioned ``z`` is LU-factorized. A singular ``z`` (a lossless
    bath at zero frequency) is inverted on the complement of its kernel via
    the spectral projector onto that kernel; inputs with a component in the
    kernel make the time integral diverge and raise.
    """

    def __init__(self, z: np.ndarray):
        self.z = z
        sv = scipy.linalg.svdvals(z)
        top = sv[0] if sv.size and sv[0] > 0 else 1.0
        cond = top / sv[-1] if sv[-1] > 0 else np.inf
        self.kernel_proj = None
        if cond <= RESOLVENT_COND_MAX:
            self.lu = scipy.linalg.lu_factor(z)
            return
        tol = top / RESOLVENT_COND_MAX
        u, s, vh = scipy.linalg.svd(z)
        right = vh[s <= tol].conj().T
        left = u[:, s <= tol]
        gram = left.conj().T @ right
        if np.linalg.cond(gram) > RESOLVENT_COND_MAX:
            raise NumericalError(
                "non-invertible bath resolvent: Markov/RWA limit undefined "
                "(zero eigenvalue is not semisimple)")
        self.kernel_proj = right @ np.linalg.solve(gram, left.conj().T)
        self.lu = scipy.linalg.lu_factor(z + self.kernel_proj)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if self.kernel_proj is not None:
            k = self.kernel_proj @ x
            scale = max(float(np.max(np.abs(x))), 1e-300)
            if np.max(np.abs(k)) > 1e-9 * scale:
                raise NumericalError(
                    "non-invertible bath resolvent: Markov/RWA limit undefined "
                    "(interaction drives a stationary bath mode)")
            x = x - k
        return -scipy.linalg.lu_solve(self.lu, x)


def _left_right(op_full, x):
    """``-i[op, x]`` for a stack of full-space matrices ``x`` (n, d, d)."""
    return -1j * (op_full @ x - x @ op_full)


def second_order_generator(lb: np.ndarray, v: InteractionSpec, bath_state,
                           secular: bool = True, method: str = "born") -> ReducedGenerator:
    """Bath-induced second-order generator on the system space.

    Parameters
    ----------
    lb : ndarray
        Bath Liouvillian on the bath space, ``(d_B**2, d_B**2)``.
    v : InteractionSpec
        Interaction pieces; the bath-averaged part must already be removed
        (see :func:`mean_field_split`).
    bath_state : ndarray
        Reference bath state; should be stationary under ``lb``.
    secular : bool
        Keep only piece pairs whose frequencies cancel. When off, the
        remaining pairs are returned as oscillating pieces.
    method : str
        Tag recorded on the result (``born``, ``fast_bath`` or ``sideband``).

    Returns
    -------
    ReducedGenerator
        Only the bath-induced part; add the system's own Liouvillian
        separately.
    """
    rho_b = check_density_matrix(bath_state, "bath state")
    if not v.pieces:
        raise ValidationError("empty interaction: dimensions unknown")
    ds, db = v.dims
    if lb.shape != (db * db, db * db) or rho_b.shape[0] != db:
        raise ValidationError("bath Liouvillian, bath state and interaction disagree on dimension")

    shift, _ = mean_field_split(v, rho_b)
    worst = max(float(np.max(np.abs(op))) for op, _ in shift)
    if worst > PLP_TOL:
        raise ValidationError(
            f"P L_Int P != 0 (residual {worst:.3e}); apply mean_field_split first")

    d = ds * db
    n_units = ds * ds
    # system matrix units E_ij stacked in column-stacking order
    units = np.zeros((n_units, ds, ds), dtype=complex)
    units[np.arange(n_units), np.arange(n_units) % ds, np.arange(n_units) // ds] = 1.0
    product = np.einsum("nij,ab->niajb", units, rho_b).reshape(n_units, d, d)

    full_ops = [np.kron(p.system_op, p.bath_op) for p in v.pieces]
    freqs = [p.freq for p in v.pieces]

    resolvents: list[tuple[float, _Resolvent]] = []

    def resolvent_for(w):
        for w0, r in resolvents:
            if abs(w0 - w) <= FREQ_TOL:
                return r
        r = _Resolvent(lb - 1j * w * np.eye(db * db))
        resolvents.append((w, r))
        return r

    # groups of output frequency -> accumulated (n_units, ds, ds) images
    images: list[tuple[float, np.ndarray]] = []

    def accumulate(w, block):
        for idx, (w0, acc) in enumerate(images):
            if abs(w0 - w) <= FREQ_TOL:
                images[idx] = (w0, acc + block)
                return
        images.append((w, block))

    for kp, (inner, wp) in enumerate(zip(full_ops, freqs)):
        partners = [k for k, w in enumerate(freqs) if not secular or abs(w + wp) <= FREQ_TOL]
        if not partners:
            continue
        x = _left_right(inner, product)
        # Q = 1 - P; P of this term vanishes once <B> = 0 but is removed explicitly
        x = x - np.einsum("nibjb,ac->niajc",
                          x.reshape(n_units, ds, db, ds, db), rho_b).reshape(n_units, d, d)
        # resolvent acts on the bath indices of each (s, s') block
        blocks = x.reshape(n_units, ds, db, ds, db).transpose(0, 1, 3, 4, 2)
        cols = blocks.reshape(n_units * ds * ds, db * db).T
        y = resolvent_for(wp)(cols).T.reshape(n_units, ds, ds, db, db)
        y = y.transpose(0, 1, 4, 2, 3).reshape(n_units, d, d)
        for k in partners:
            out = _left_right(full_ops[k], y)
            reduced = np.einsum("niaja->nij", out.reshape(n_units, ds, db, ds, db))
            accumulate(freqs[k] + wp, reduced)

    n2 = ds * ds
    static = np.zeros((n2, n2), dtype=complex)
    pieces = []
    for w, imgs in images:
        mat = imgs.transpose(0, 2, 1).reshape(n_units, n2).T
        if abs(w) <= FREQ_TOL:
            static += mat
        else:
            pieces.append(OscillatoryPiece(mat, w, "system"))
    if not images:
        warnings.warn("secular filter removed every term; returning a zero generator",
                      stacklevel=2)
    return ReducedGenerator(static, method, {}, tuple(pieces))


# -- Lambda system --------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaParams:
    """Rotating-frame Lambda system: drives ``omega_a``, ``omega_b`` (complex),
    detuning difference ``delta`` and average detuning ``bigdelta``."""

    omega_a: complex
    omega_b: complex
    delta: float
    bigdelta: float

    def __post_init__(self):
        object.__setattr__(self, "omega_a", complex(self.omega_a))
        object.__setattr__(self, "omega_b", complex(self.omega_b))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "bigdelta", float(self.bigdelta))

    @property
    def adiabatic(self) -> bool:
        return abs(self.bigdelta) >= 10 * max(abs(self.delta), abs(self.omega_a),
                                              abs(self.omega_b))


def lambda_effective_hamiltonian(p: LambdaParams) -> np.ndarray:
    """Ground-manifold Hamiltonian after eliminating the far-detuned level.

    Basis order ``|a>, |b>``. The second-order shift is
    ``-<j|H|e><e|H|k> / Delta = -conj(Omega_j) Omega_k / (4 Delta)``.
    """
    if p.bigdelta == 0:
        raise ValidationError("bigdelta must be nonzero")
    oa, ob, dd = p.omega_a, p.omega_b, p.bigdelta
    h = np.array([[-p.delta / 2 - abs(oa) ** 2 / (4 * dd), -np.conj(oa) * ob / (4 * dd)],
                  [-oa * np.conj(ob) / (4 * dd), p.delta / 2 - abs(ob) ** 2 / (4 * dd)]],
                 dtype=complex)
    return h


# -- sideband cooling -----------------------------------------------------------------


@dataclass(frozen=True)
class OptomechParams:
    omega_m: float
    delta: float
    kappa: float
    gamma_m: float
    nbar: float
    g: complex
    n_cav: int = 4
    n_mech: int = 12

    def __post_init__(self):
        object.__setattr__(self, "g", complex(self.g))
        for name in ("omega_m", "delta", "kappa", "gamma_m", "nbar"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.kappa <= 0:
            raise ValidationError("kappa must be positive")
        if self.omega_m <= 0:
            raise ValidationError("omega_m must be positive")
        if self.gamma_m < 0 or self.nbar < 0:
            raise ValidationError("gamma_m and nbar must be non-negative")
        if int(self.n_cav) < 2 or int(self.n_mech) < 2:
            raise ValidationError("Fock cutoffs must be >= 2")

    def replace(self, **changes) -> "OptomechParams":
        from dataclasses import replace
        return replace(self, **changes)


def sideband_spectral(delta: float, kappa: float, omega: float, lam: int) -> complex:
    """``1 / (i (delta + lam*omega) + kappa/2)``, the one-sided cavity response."""
    if kappa <= 0:
        raise ValidationError("kappa must be positive")
    if lam not in (1, -1):
        raise ValidationError("lam must be +1 or -1")
    return 1.0 / (1j * (delta + lam * omega) + kappa / 2)


def sideband_rates(p: OptomechParams) -> tuple[float, float, float]:
    """Heating rate, cooling rate and mechanical frequency shift."""
    g2 = abs(p.g) ** 2
    k2 = (p.kappa / 2) ** 2
    gamma_h = g2 * p.kappa / ((p.delta + p.omega_m) ** 2 + k2)
    gamma_c = g2 * p.kappa / ((p.delta - p.omega_m) ** 2 + k2)
    e_plus = sideband_spectral(p.delta, p.kappa, p.omega_m, 1)
    e_minus = sideband_spectral(p.delta, p.kappa, p.omega_m, -1)
    delta_m = g2 * (e_plus + e_minus).imag
    return float(gamma_h), float(gamma_c), float(delta_m)


def sideband_generator(p: OptomechParams) -> ReducedGenerator:
    """Lindblad generator of the mechanical mode with the cavity eliminated."""
    from .models import fock_annihilation

    b = fock_annihilation(p.n_mech)
    gh, gc, dm = sideband_rates(p)
    gen = (commutator_superop(dm * (b.conj().T @ b))
           + dissipator_superop(b.conj().T, p.gamma_m * p.nbar + gh)
           + dissipator_superop(b, p.gamma_m * (1 + p.nbar) + gc))
    rates = {"gamma_h": gh, "gamma_c": gc, "delta_m": dm}
    return ReducedGenerator(gen, "sideband", rates)


def steady_occupation(p: OptomechParams) -> float:
    gh, gc, _ = sideband_rates(p)
    den = p.gamma_m + gc - gh
    if den <= 0:
        raise NumericalError("reduced model unstable: gamma_m + gamma_c - gamma_h <= 0")
    return (p.gamma_m * p.nbar + gh) / den


def cooperativity(p: OptomechParams) -> float:
    if p.gamma_m == 0:
        raise ValidationError("cooperativity undefined for gamma_m = 0")
    return 4 * abs(p.g) ** 2 / (p.kappa * p.gamma_m)


def extract_sideband_rates(generator: np.ndarray) -> dict[str, float]:
    """Read heating/cooling rates and frequency shift off a phase-covariant generator.

    Uses matrix elements on the lowest Fock states: ``<0|G(|1><1|)|0>`` is
    the total downward rate, ``<1|G(|0><0|)|1>`` the upward rate, and the
    imaginary part of ``<0|G(|0><1|)|1>`` the frequency shift.
    """
    d = hilbert_dim(generator)
    if d < 3:
        raise ValidationError("need a Fock cutoff of at least 3 to read rates")

    def elem(row, col, i, j):
        # <row|G(|i><j|)|col>
        return generator[row + col * d, i + j * d]

    down = elem(0, 0, 1, 1).real
    up = elem(1, 1, 0, 0).real
    shift = elem(0, 1, 0, 1).imag
    return {"up": float(up), "down": float(down), "shift": float(shift)}


def restrict_generator(s: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    from .superop import restrict_superop
    return restrict_superop(s, indices)


def born_liouvillian(spec: LiouvillianSpec, proj, interaction: InteractionSpec
                     ) -> LiouvillianSpec:
    """Full-space Liouvillian whose P-projection obeys the time-convolution Born equation.

    The bath-averaged part of the interaction is moved into the system
    first. Dropping ``Q L_Int' Q`` from the equation for ``w = Q rho`` then
    leaves exactly the second-order memory equation, so propagating
    ``rho_S (x) rho_B`` under the returned Liouvillian and tracing out the
    bath gives its solution.
    """
    for label in ("system", "bath", "interaction"):
        if not spec.has_label(label):
            raise ValidationError(f"Liouvillian is missing label {label!r}")
    ds, db = proj.space.dims
    shift, vprime = mean_field_split(interaction, proj.bath_state)
    q = proj.q
    eye_b = np.eye(db)

    mf_static = np.zeros_like(spec.part("system"))
    mf_pieces = []
    for op, w in shift:
        s = raw_commutator_superop(np.kron(op, eye_b))
        if abs(w) <= FREQ_TOL:
            mf_static = mf_static + s
        else:
            mf_pieces.append((s, w))

    inter = vprime.liouvillian()
    pieces = [p for p in spec.pieces if p.label != "interaction"]
    for s, w in mf_pieces:
        pieces.append(OscillatoryPiece(s, w, "system"))
    for p in inter.pieces:
        pieces.append(OscillatoryPiece(p.superop - q @ p.superop @ q, p.freq, "interaction"))
    li = inter.part("interaction")
    parts = {
        "system": spec.part("system") + mf_static,
        "bath": spec.part("bath"),
        "interaction": li - q @ li @ q,
    }
    return LiouvillianSpec(spec.hilbert_dim, parts, tuple(pieces), spec.space)


def adequate_cutoff(occupation: float, tol: float = 1e-9, cap: int = 40) -> int:
    """Smallest Fock cutoff whose truncated geometric mean is within ``tol`` of ``occupation``.

    A truncated geometric distribution with ratio ``r`` loses about
    ``n r**n`` from its mean.
    """
    if occupation <= 0:
        return 2
    r = occupation / (1 + occupation)
    n = 2
    while n < cap and n * r ** n > tol:
        n += 1
    return n

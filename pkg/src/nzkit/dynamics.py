"""Time evolution, matrix exponentials, steady states and the Nakajima-Zwanzig check."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from .errors import NumericalError, ValidationError
from .liouvillian import LiouvillianSpec, ProjectorPair, evaluate_at, generator_residual
from .superop import (
    _square,
    check_density_matrix,
    devectorize,
    hilbert_dim,
    vectorize,
)

TRAJECTORY_POSITIVITY_TOL = -1e-6
STEADY_GAP_TOL = 1e-8
PROPAGATOR_COND_MAX = 1e12


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    steps: int

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValidationError(f"time grid needs t1 > t0, got [{self.t0}, {self.t1}]")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValidationError(f"steps must be a positive integer, got {self.steps}")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.steps

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.steps + 1)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, d, d)
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self):
        return len(self.times)


def rk4_step_matrix(s: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step for ``x' = s x`` collapses to a fixed polynomial in ``h s``."""
    a = h * s
    a2 = a @ a
    eye = np.eye(s.shape[0], dtype=complex)
    return eye + a + a2 / 2 + (a2 @ a) / 6 + (a2 @ a2) / 24


def _rk4_time_dependent(spec: LiouvillianSpec, x: np.ndarray, t: float, h: float) -> np.ndarray:
    static = spec.static_part
    pieces = [(p.superop, p.freq) for p in spec.pieces]

    def rhs(tt, y):
        out = static @ y
        for s, w in pieces:
            out = out + np.exp(1j * w * tt) * (s @ y)
        return out

    k1 = rhs(t, x)
    k2 = rhs(t + h / 2, x + h / 2 * k1)
    k3 = rhs(t + h / 2, x + h / 2 * k2)
    k4 = rhs(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def propagate(spec: LiouvillianSpec, rho0, grid: TimeGrid,
              observables: Mapping[str, np.ndarray] | None = None,
              substeps: int = 1, validate: bool = True) -> Trajectory:
    """Integrate ``rho' = L(t) rho`` with fixed-step classical RK4.

    States are recorded at every grid point; ``substeps`` RK4 steps are taken
    between consecutive records. For a static Liouvillian the RK4 update is
    a fixed matrix, which is built once and reused.
    """
    rho0 = check_density_matrix(rho0, "initial state")
    d = spec.hilbert_dim
    if rho0.shape[0] != d:
        raise ValidationError(
            f"initial state dimension {rho0.shape[0]} does not match Liouvillian dimension {d}")
    if substeps < 1:
        raise ValidationError("substeps must be >= 1")
    observables = dict(observables or {})
    for name, o in observables.items():
        if _square(o, name).shape[0] != d:
            raise ValidationError(f"observable {name!r} has the wrong dimension")

    times = grid.times
    h = grid.dt / substeps
    states = np.empty((len(times), d, d), dtype=complex)
    x = vectorize(rho0).copy()
    states[0] = rho0

    if spec.is_static:
        step = rk4_step_matrix(spec.static_part, h)
        record_step = np.linalg.matrix_power(step, substeps) if substeps > 1 else step
        for n in range(1, len(times)):
            x = record_step @ x
            states[n] = devectorize(x, d)
    else:
        t = grid.t0
        for n in range(1, len(times)):
            for k in range(substeps):
                x = _rk4_time_dependent(spec, x, t, h)
                t = grid.t0 + (n - 1) * grid.dt + (k + 1) * h
            states[n] = devectorize(x, d)

    if validate:
        for n, t in enumerate(times):
            try:
                check_density_matrix(states[n], positivity_tol=TRAJECTORY_POSITIVITY_TOL)
            except ValidationError as exc:
                raise NumericalError(f"invalid state at t = {t:.12g}: {exc}") from None

    obs = {name: np.einsum("ij,nji->n", o, states) for name, o in observables.items()}
    return Trajectory(times=times, states=states, observables=obs)


def superop_exp(s: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(s t)`` by scaling and squaring with a Pade approximant."""
    return scipy.linalg.expm(np.asarray(s, dtype=complex) * t)


def steady_state(s: np.ndarray) -> np.ndarray:
    """Unique stationary density matrix of the generator ``s``.

    The null vector is the right singular vector of the smallest singular
    value. It is Hermitized and trace-normalized; a second singular value
    below ``1e-8 * ||s||`` means the stationary state is not unique.
    """
    d = hilbert_dim(s)
    _, sv, vh = scipy.linalg.svd(s, lapack_driver="gesdd")
    scale = sv[0] if sv[0] > 0 else 1.0
    if d > 1 and sv[-2] < STEADY_GAP_TOL * scale:
        raise NumericalError(
            f"non-unique steady state (second-smallest singular value {sv[-2]:.3e}, "
            f"norm {scale:.3e})")
    x = devectorize(vh[-1].conj(), d)
    x = (x + x.conj().T) / 2
    tr = np.trace(x).real
    if abs(tr) < 1e-12:
        raise NumericalError("trace-normalization failure: null vector has zero trace")
    return x / tr


@dataclass
class NZReport:
    """Pointwise ``max|Q rho(t) - w(t)|`` along a grid."""

    times: np.ndarray
    residuals: np.ndarray
    max_residual: float


def _cumulative_quadrature(f: np.ndarray, h: float, rule: str) -> np.ndarray:
    """Running integral of samples ``f[n]`` (first axis) on a uniform grid."""
    n = f.shape[0] - 1
    out = np.zeros_like(f)
    if rule == "trapezoid" or n < 3:
        seg = h / 2 * (f[:-1] + f[1:])
    elif rule == "cubic":
        # Per interval, integrate the cubic through four neighbouring nodes.
        seg = np.empty_like(f[:-1])
        seg[0] = h / 24 * (9 * f[0] + 19 * f[1] - 5 * f[2] + f[3])
        seg[1:-1] = h / 24 * (-f[:-3] + 13 * f[1:-2] + 13 * f[2:-1] - f[3:])
        seg[-1] = h / 24 * (f[-4] - 5 * f[-3] + 19 * f[-2] + 9 * f[-1])
    else:
        raise ValidationError(f"unknown quadrature rule {rule!r}")
    out[1:] = np.cumsum(seg, axis=0)
    return out


def nz_consistency(spec: LiouvillianSpec, proj: ProjectorPair, rho_s0, grid: TimeGrid,
                   quadrature: str = "cubic") -> NZReport:
    """Compare ``Q rho(t)`` from direct integration with the formal solution

        w(t) = G(t) int_0^t G(t')^{-1} Q L(t') P rho(t') dt'

    where ``G' = Q L(t) G``, ``G(0) = I``. The full state starts as
    ``rho_s0 (x) bath_state`` so that ``w(0) = 0``. ``G`` and ``rho`` share
    one RK4 integration; ``G^{-1}`` is applied through an LU factorization at
    each node and the integral uses the chosen cumulative rule
    (``"cubic"``, fourth order, or ``"trapezoid"``).
    """
    rho_s0 = check_density_matrix(rho_s0, "initial system state")
    rho0 = np.kron(rho_s0, proj.bath_state)
    d = spec.hilbert_dim
    if rho0.shape[0] != d:
        raise ValidationError("initial state does not match Liouvillian dimension")
    p, q = proj.p, proj.q
    n2 = d * d
    times = grid.times
    h = grid.dt

    x = vectorize(rho0).copy()
    g = np.eye(n2, dtype=complex)
    xs = np.empty((len(times), n2), dtype=complex)
    integrand = np.empty((len(times), n2), dtype=complex)
    gs = np.empty((len(times), n2, n2), dtype=complex)

    def node(n, t, x, g):
        cond = np.linalg.cond(g)
        if not np.isfinite(cond) or cond > PROPAGATOR_COND_MAX:
            raise NumericalError(f"ill-conditioned propagator at t = {t:.6g} (cond {cond:.3e})")
        lu = scipy.linalg.lu_factor(g)
        integrand[n] = scipy.linalg.lu_solve(lu, q @ (evaluate_at(spec, t) @ (p @ x)))
        xs[n] = x
        gs[n] = g

    node(0, times[0], x, g)
    for n in range(1, len(times)):
        t = times[n - 1]
        l1 = evaluate_at(spec, t)
        l2 = evaluate_at(spec, t + h / 2) if not spec.is_static else l1
        l4 = evaluate_at(spec, t + h) if not spec.is_static else l1
        ql1, ql2, ql4 = q @ l1, q @ l2, q @ l4
        kx1 = l1 @ x
        kg1 = ql1 @ g
        kx2 = l2 @ (x + h / 2 * kx1)
        kg2 = ql2 @ (g + h / 2 * kg1)
        kx3 = l2 @ (x + h / 2 * kx2)
        kg3 = ql2 @ (g + h / 2 * kg2)
        kx4 = l4 @ (x + h * kx3)
        kg4 = ql4 @ (g + h * kg3)
        x = x + h / 6 * (kx1 + 2 * kx2 + 2 * kx3 + kx4)
        g = g + h / 6 * (kg1 + 2 * kg2 + 2 * kg3 + kg4)
        node(n, times[n], x, g)

    running = _cumulative_quadrature(integrand, h, quadrature)
    w = np.einsum("nij,nj->ni", gs, running)
    qx = xs @ q.T
    residuals = np.max(np.abs(qx - w), axis=1)
    return NZReport(times=times, residuals=residuals, max_residual=float(residuals.max()))


def is_valid_generator(s: np.ndarray, tol: float = 1e-10) -> bool:
    return generator_residual(s) < tol

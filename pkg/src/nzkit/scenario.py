"""Scenario files: strict JSON parsing, full-vs-reduced runs and parameter sweeps.

A scenario document looks like::

    {
      "name": "cooling",
      "model": "optomech",
      "params": {"omega_m": 10, "delta": 10, "kappa": 1, "gamma_m": 0.001,
                 "nbar": 10, "g": 0.05, "n_cav": 4, "n_mech": 12},
      "grid": {"t0": 0, "t1": 20},
      "initial": {"thermal": 2.0},
      "outputs": ["occupation"]
    }

Only two keys have defaults: ``grid.steps`` (4000) and ``outputs``
(``["occupation"]``). ``grid.substeps`` (RK4 steps per recorded point) is
optional and defaults to 1. ``seed`` is required for ``random_bipartite``.
Complex parameters are written as a number or a ``[re, im]`` pair.
"""

from __future__ import annotations

import copy
import json
import math
import re
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import scipy.linalg

from . import __version__
from .dynamics import TimeGrid, nz_consistency, propagate, steady_state
from .errors import NumericalError, ValidationError
from .liouvillian import LiouvillianSpec, build_projector, check_structure
from .models import (
    LAMBDA_GROUND_BLOCK,
    basis_projector,
    build_lambda,
    build_optomech,
    fock_annihilation,
    random_bipartite,
    thermal_state,
)
from .reductions import (
    LambdaParams,
    OptomechParams,
    adequate_cutoff,
    cooperativity,
    lambda_effective_hamiltonian,
    mean_field_split,
    restrict_generator,
    second_order_generator,
    sideband_generator,
    sideband_rates,
    steady_occupation,
)
from .superop import commutator_superop, hilbert_dim, partial_trace, trace_distance

DEFAULT_STEPS = 4000
DEFAULT_OUTPUTS = ("occupation",)
MODELS = ("lambda", "optomech", "random_bipartite")
NAME_RE = re.compile(r"^[A-Za-z0-9_.-]+$")

PARAM_KEYS = {
    "lambda": ("omega_a", "omega_b", "delta", "bigdelta"),
    "optomech": ("omega_m", "delta", "kappa", "gamma_m", "nbar", "g", "n_cav", "n_mech"),
    "random_bipartite": ("coupling", "bath_decay", "system_dim", "bath_dim",
                         "system_norm", "bath_norm"),
}
COMPLEX_PARAMS = {"omega_a", "omega_b", "g"}
INT_PARAMS = {"n_cav", "n_mech", "system_dim", "bath_dim"}

OBSERVABLES = {
    "lambda": ("occupation", "pop_a", "pop_b", "pop_e", "coherence_ab"),
    "optomech": ("occupation", "amplitude"),
    "random_bipartite": ("occupation", "coherence_01"),
}
METRICS = ("steady_state",)

# cutoffs and window used for the NZ residual probe on optomech runs
NZ_PROBE_CUTOFFS = (3, 2)
NZ_WINDOW = 1.0
NZ_STEP_SCALE = 0.05
NZ_MAX_STEPS = 20000

TOP_KEYS = ("name", "model", "params", "grid", "initial", "outputs", "seed")
GRID_KEYS = ("t0", "t1", "steps", "substeps")


@dataclass(frozen=True)
class Scenario:
    name: str
    model: str
    params: dict[str, Any]
    grid: TimeGrid
    substeps: int
    initial: tuple[str, Any]
    outputs: tuple[str, ...]
    seed: int | None
    document: dict[str, Any] = field(repr=False, compare=False, default_factory=dict)

    @property
    def observables(self) -> tuple[str, ...]:
        return tuple(o for o in self.outputs if o not in METRICS)


@dataclass
class RunSummary:
    scenario: str
    model: str
    rates: dict[str, float]
    observables: dict[str, float]
    max_trace_distance: float
    residuals: dict[str, Any]
    grid: dict[str, float]
    seed: int | None
    duration: float = 0.0

    def as_json(self) -> dict[str, Any]:
        """The fixed key set written to disk; wall-clock time is left out."""
        return {
            "scenario": self.scenario,
            "model": self.model,
            "rates": self.rates,
            "observables": self.observables,
            "max_trace_distance": self.max_trace_distance,
            "residuals": self.residuals,
            "grid": self.grid,
            "seed": self.seed,
            "version": __version__,
        }


# -- parsing --------------------------------------------------------------------------


def _reject_constant(name):
    raise ValidationError(f"non-finite JSON constant {name} is not allowed")


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ValidationError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _load_json(text: str) -> Any:
    try:
        return json.loads(text, object_pairs_hook=_no_duplicates,
                          parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"JSON parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _check_keys(obj, allowed: Sequence[str], required: Sequence[str], path: str):
    if not isinstance(obj, dict):
        raise ValidationError(f"{path or 'document'} must be an object")
    for k in obj:
        if k not in allowed:
            where = f"{path}.{k}" if path else k
            raise ValidationError(f"unknown key {where!r}")
    for k in required:
        if k not in obj:
            where = f"{path}.{k}" if path else k
            raise ValidationError(f"missing key {where!r}")


def _real(x, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValidationError(f"{path} must be a number")
    if not math.isfinite(x):
        raise ValidationError(f"{path} must be finite")
    return float(x)


def _integer(x, path: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        if isinstance(x, float) and x.is_integer():
            return int(x)
        raise ValidationError(f"{path} must be an integer")
    return int(x)


def _complex(x, path: str) -> complex:
    if isinstance(x, list):
        if len(x) != 2:
            raise ValidationError(f"{path} must be a number or a [re, im] pair")
        return complex(_real(x[0], f"{path}[0]"), _real(x[1], f"{path}[1]"))
    return complex(_real(x, path))


def _parse_params(model: str, raw, path: str = "params") -> dict[str, Any]:
    keys = PARAM_KEYS[model]
    _check_keys(raw, keys, keys, path)
    out: dict[str, Any] = {}
    for k in keys:
        sub = f"{path}.{k}"
        if k in COMPLEX_PARAMS:
            out[k] = _complex(raw[k], sub)
        elif k in INT_PARAMS:
            out[k] = _integer(raw[k], sub)
        else:
            out[k] = _real(raw[k], sub)
    if model == "lambda":
        if out["bigdelta"] == 0:
            raise ValidationError("bigdelta must be nonzero")
        LambdaParams(**out)
    elif model == "optomech":
        OptomechParams(**out)
    else:
        if out["coupling"] < 0 or out["bath_decay"] <= 0:
            raise ValidationError("coupling must be >= 0 and bath_decay > 0")
        if out["system_dim"] < 2 or out["bath_dim"] < 2:
            raise ValidationError("system_dim and bath_dim must be >= 2")
        if out["system_norm"] < 0 or out["bath_norm"] < 0:
            raise ValidationError("system_norm and bath_norm must be >= 0")
    return out


def _system_dim(model: str, params: dict[str, Any]) -> int:
    if model == "lambda":
        return 2
    if model == "optomech":
        return params["n_mech"]
    return params["system_dim"]


def _parse_initial(raw, model: str, params: dict[str, Any]) -> tuple[str, Any]:
    if raw == "ground":
        return ("ground", None)
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ValidationError(
            "initial must be \"ground\", {\"thermal\": nbar} or {\"superposition\": [...]}")
    (kind, value), = raw.items()
    if kind == "thermal":
        if model != "optomech":
            raise ValidationError("initial.thermal is only defined for the optomech model")
        nbar = _real(value, "initial.thermal")
        if nbar < 0:
            raise ValidationError("initial.thermal must be non-negative")
        return ("thermal", nbar)
    if kind == "superposition":
        if not isinstance(value, list) or not value:
            raise ValidationError("initial.superposition must be a non-empty list")
        coeffs = [_complex(c, f"initial.superposition[{i}]") for i, c in enumerate(value)]
        dim = _system_dim(model, params)
        if len(coeffs) > dim:
            raise ValidationError(
                f"initial.superposition has {len(coeffs)} entries, system dimension is {dim}")
        norm = math.sqrt(sum(abs(c) ** 2 for c in coeffs))
        if abs(norm - 1.0) > 1e-9:
            raise ValidationError(f"initial.superposition must have unit norm, got {norm:.12g}")
        return ("superposition", tuple(coeffs))
    raise ValidationError(f"unknown key 'initial.{kind}'")


def scenario_from_dict(doc: dict[str, Any]) -> Scenario:
    _check_keys(doc, TOP_KEYS, ("name", "model", "params", "grid", "initial"), "")
    name = doc["name"]
    if not isinstance(name, str) or not NAME_RE.match(name):
        raise ValidationError("name must be a non-empty string of letters, digits, '_', '.', '-'")
    model = doc["model"]
    if model not in MODELS:
        raise ValidationError(f"unknown model {model!r}; expected one of {list(MODELS)}")
    params = _parse_params(model, doc["params"])

    g = doc["grid"]
    _check_keys(g, GRID_KEYS, ("t0", "t1"), "grid")
    steps = _integer(g.get("steps", DEFAULT_STEPS), "grid.steps")
    substeps = _integer(g.get("substeps", 1), "grid.substeps")
    if substeps < 1:
        raise ValidationError("grid.substeps must be >= 1")
    grid = TimeGrid(_real(g["t0"], "grid.t0"), _real(g["t1"], "grid.t1"), steps)

    initial = _parse_initial(doc["initial"], model, params)

    outputs = doc.get("outputs", list(DEFAULT_OUTPUTS))
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        raise ValidationError("outputs must be a list of strings")
    allowed = OBSERVABLES[model] + METRICS
    for i, o in enumerate(outputs):
        if o not in allowed:
            raise ValidationError(f"outputs[{i}]: unknown output {o!r} for model {model}")
    if len(set(outputs)) != len(outputs):
        raise ValidationError("outputs contains duplicates")
    if "steady_state" in outputs and model != "optomech":
        raise ValidationError("the steady_state output is only defined for the optomech model")

    seed = doc.get("seed")
    if seed is not None:
        seed = _integer(seed, "seed")
        if seed < 0:
            raise ValidationError("seed must be an unsigned integer")
    if model == "random_bipartite" and seed is None:
        raise ValidationError("missing key 'seed' (required for random_bipartite)")

    return Scenario(name, model, params, grid, substeps, initial, tuple(outputs), seed,
                    copy.deepcopy(doc))


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document (strict JSON)."""
    return scenario_from_dict(_load_json(text))


def load_scenario(path) -> Scenario:
    return parse_scenario(Path(path).read_text())


# -- comparisons ----------------------------------------------------------------------


@dataclass
class _Comparison:
    """Full and reduced problems, ready to propagate."""

    full_spec: LiouvillianSpec
    full_rho0: np.ndarray
    full_ops: dict[str, np.ndarray]
    reduced_spec: LiouvillianSpec
    reduced_rho0: np.ndarray
    reduced_ops: dict[str, np.ndarray]
    to_system: Callable[[np.ndarray], np.ndarray]
    from_reduced: Callable[[np.ndarray], np.ndarray]
    rates: dict[str, float]
    structure: dict[str, float]
    nz: tuple[LiouvillianSpec, Any, np.ndarray]


def _pure(coeffs, dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[: len(coeffs)] = coeffs
    return np.outer(psi, psi.conj())


def _initial_system(sc: Scenario, dim: int) -> np.ndarray:
    kind, value = sc.initial
    if kind == "ground":
        return basis_projector(dim, 0)
    if kind == "thermal":
        return thermal_state(dim, value)
    return _pure(value, dim)


def _nz_steps(spec: LiouvillianSpec, span: float) -> int:
    norm = float(np.linalg.norm(spec.static_part, 1))
    return int(min(NZ_MAX_STEPS, max(100, math.ceil(span * norm / NZ_STEP_SCALE))))


def _lambda_comparison(sc: Scenario) -> _Comparison:
    p = LambdaParams(**sc.params)
    model = build_lambda(p)
    proj = build_projector(model.bath_state, model.space)
    structure = check_structure(model.spec, proj).as_dict()

    _, vprime = mean_field_split(model.interaction, model.bath_state)
    red = second_order_generator(model.lb, vprime, model.bath_state, method="fast_bath")
    ground = restrict_generator(red.generator, LAMBDA_GROUND_BLOCK)
    reduced = LiouvillianSpec(2, {"system": commutator_superop(model.h_s) + ground})

    h_eff = lambda_effective_hamiltonian(p)
    rates = {
        "coupling_re": float(h_eff[0, 1].real),
        "coupling_im": float(h_eff[0, 1].imag),
        "light_shift_a": float(h_eff[0, 0].real + p.delta / 2),
        "light_shift_b": float(h_eff[1, 1].real - p.delta / 2),
    }

    rho_s = _initial_system(sc, 2)
    full_rho0 = np.zeros((3, 3), dtype=complex)
    full_rho0[:2, :2] = rho_s
    # the auxiliary system factor is {|a>, |b>, |0>}
    rho_nz = np.zeros((3, 3), dtype=complex)
    rho_nz[:2, :2] = rho_s

    def unit(n, i, j):
        out = np.zeros((n, n), dtype=complex)
        out[i, j] = 1.0
        return out

    # Tr(rho |b><a|) = rho_ab
    full_ops = {"occupation": unit(3, 1, 1), "pop_a": unit(3, 0, 0), "pop_b": unit(3, 1, 1),
                "pop_e": unit(3, 2, 2), "coherence_ab": unit(3, 1, 0)}
    reduced_ops = {"occupation": unit(2, 1, 1), "pop_a": unit(2, 0, 0), "pop_b": unit(2, 1, 1),
                   "pop_e": np.zeros((2, 2), dtype=complex), "coherence_ab": unit(2, 1, 0)}

    def pad(r):
        out = np.zeros((3, 3), dtype=complex)
        out[:2, :2] = r
        return out

    full = LiouvillianSpec(3, {"system": commutator_superop(model.h_full)})
    return _Comparison(full, full_rho0, full_ops, reduced, rho_s, reduced_ops,
                       lambda r: r, pad, rates, structure, (model.spec, proj, rho_nz))


def _optomech_reduced(p: OptomechParams) -> LiouvillianSpec:
    """Sideband generator moved back to the frame of the drive."""
    b = fock_annihilation(p.n_mech)
    gen = sideband_generator(p).generator + commutator_superop(p.omega_m * b.conj().T @ b)
    return LiouvillianSpec(p.n_mech, {"system": gen})


def _optomech_comparison(sc: Scenario) -> _Comparison:
    p = OptomechParams(**sc.params)
    model = build_optomech(p)
    proj = build_projector(model.bath_state, model.space)
    structure = check_structure(model.spec_schrodinger, proj).as_dict()

    gh, gc, dm = sideband_rates(p)
    rates = {"gamma_h": gh, "gamma_c": gc, "delta_m": dm}
    if p.gamma_m > 0:
        rates["cooperativity"] = cooperativity(p)

    rho_s = _initial_system(sc, p.n_mech)
    full_rho0 = np.kron(rho_s, model.bath_state)
    b = model.ops["b_mech"]
    full_ops = {"occupation": model.ops["n_mech"], "amplitude": model.ops["b"]}
    reduced_ops = {"occupation": b.conj().T @ b, "amplitude": b}

    # NZ probe on a small-cutoff copy of the same model
    small = p.replace(n_mech=min(p.n_mech, NZ_PROBE_CUTOFFS[0]),
                      n_cav=min(p.n_cav, NZ_PROBE_CUTOFFS[1]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        small_model = build_optomech(small)
    small_proj = build_projector(small_model.bath_state, small_model.space)
    nz = (small_model.spec_schrodinger, small_proj, basis_projector(small.n_mech, 0))

    space = model.space
    return _Comparison(model.spec_schrodinger, full_rho0, full_ops, _optomech_reduced(p), rho_s,
                       reduced_ops, lambda r: partial_trace(r, space, 0), lambda r: r,
                       rates, structure, nz)


def bipartite_markov_spec(model) -> LiouvillianSpec:
    """Born-Markov generator of a bipartite model (system part plus bath-induced part)."""
    ds = model.h_s.shape[0]
    system = commutator_superop(model.h_s + model.mean)
    inter = model.interaction
    if inter.pieces and any(np.any(x.bath_op != 0) for x in inter.pieces):
        system = system + second_order_generator(
            model.lb, inter, model.bath_state, method="born").generator
    return LiouvillianSpec(ds, {"system": system})


def _bipartite_model(sc: Scenario):
    q = sc.params
    return random_bipartite(sc.seed, coupling=q["coupling"], bath_decay=q["bath_decay"],
                            dims=(q["system_dim"], q["bath_dim"]),
                            system_norm=q["system_norm"], bath_norm=q["bath_norm"])


def _bipartite_comparison(sc: Scenario) -> _Comparison:
    model = _bipartite_model(sc)
    proj = build_projector(model.bath_state, model.space)
    structure = check_structure(model.spec, proj).as_dict()
    ds, db = model.space.dims
    rho_s = _initial_system(sc, ds)
    coh = np.zeros((ds, ds), dtype=complex)
    coh[1, 0] = 1.0
    eye_b = np.eye(db)
    full_ops = {"occupation": np.kron(basis_projector(ds, 1), eye_b),
                "coherence_01": np.kron(coh, eye_b)}
    reduced_ops = {"occupation": basis_projector(ds, 1), "coherence_01": coh}
    space = model.space
    rates = {"coupling": float(sc.params["coupling"]),
             "bath_decay": float(sc.params["bath_decay"])}
    return _Comparison(model.spec, np.kron(rho_s, model.bath_state), full_ops,
                       bipartite_markov_spec(model), rho_s, reduced_ops,
                       lambda r: partial_trace(r, space, 0), lambda r: r,
                       rates, structure, (model.spec, proj, rho_s))


BUILDERS = {
    "lambda": _lambda_comparison,
    "optomech": _optomech_comparison,
    "random_bipartite": _bipartite_comparison,
}


# -- running --------------------------------------------------------------------------


@dataclass
class RunResult:
    summary: RunSummary
    times: np.ndarray
    full: dict[str, np.ndarray]
    reduced: dict[str, np.ndarray]
    trace_distance: np.ndarray


def _finite(d: dict[str, float], what: str) -> dict[str, float]:
    for k, v in d.items():
        if not math.isfinite(v):
            raise NumericalError(f"{what} {k!r} is not finite ({v})")
    return d


def population_steady_state(generator: np.ndarray) -> np.ndarray:
    """Stationary populations of a generator that maps diagonal matrices to diagonal ones.

    For a phase-covariant generator such as the sideband one the steady
    state is diagonal, so the null vector of the ``n x n`` population block
    gives it without an ``n**2``-sized decomposition.
    """
    n = hilbert_dim(generator)
    idx = np.arange(n) * (n + 1)
    block = generator[np.ix_(idx, idx)]
    leak = np.delete(generator[:, idx], idx, axis=0)
    if np.max(np.abs(leak)) > 1e-12:
        raise ValidationError("generator does not keep diagonal states diagonal")
    _, sv, vh = scipy.linalg.svd(block)
    if n > 1 and sv[-2] < 1e-8 * sv[0]:
        raise NumericalError("non-unique steady state of the population block")
    pops = vh[-1].conj().real
    return pops / pops.sum()


def _optomech_observables(sc: Scenario, steady: bool) -> dict[str, float]:
    p = OptomechParams(**sc.params)
    occ = steady_occupation(p)
    out = {"occupation_formula": occ}
    n = max(p.n_mech, adequate_cutoff(occ))
    pops = population_steady_state(_optomech_reduced(p.replace(n_mech=n)).static_part)
    out["occupation_reduced_steady"] = float(pops @ np.arange(n))
    out["reduced_cutoff"] = float(n)
    if steady:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = build_optomech(p)
        rho_full = steady_state(model.spec_schrodinger.static_part)
        out["occupation_full_steady"] = float(np.trace(rho_full @ model.ops["n_mech"]).real)
    return out


def simulate(sc: Scenario) -> RunResult:
    """Run the full-vs-reduced comparison of one scenario in memory."""
    start = time.perf_counter()
    try:
        cmp = BUILDERS[sc.model](sc)
        names = sc.observables
        full = propagate(cmp.full_spec, cmp.full_rho0, sc.grid,
                         {k: cmp.full_ops[k] for k in names}, substeps=sc.substeps)
        red = propagate(cmp.reduced_spec, cmp.reduced_rho0, sc.grid,
                        {k: cmp.reduced_ops[k] for k in names}, substeps=sc.substeps)
        dist = np.array([trace_distance(cmp.to_system(a), cmp.from_reduced(b))
                         for a, b in zip(full.states, red.states)])

        nz_spec, nz_proj, nz_rho = cmp.nz
        span = min(sc.grid.t1 - sc.grid.t0, NZ_WINDOW)
        nz_grid = TimeGrid(0.0, span, _nz_steps(nz_spec, span))
        nz = nz_consistency(nz_spec, nz_proj, nz_rho, nz_grid)

        observables: dict[str, float] = {}
        for k in names:
            observables[f"{k}_full_final"] = float(full.observables[k][-1].real)
            observables[f"{k}_reduced_final"] = float(red.observables[k][-1].real)
            observables[f"{k}_max_abs_error"] = float(
                np.max(np.abs(full.observables[k] - red.observables[k])))
        if sc.model == "lambda":
            observables["max_pop_e"] = float(np.max(
                np.einsum("nii->n", full.states[:, 2:, 2:]).real))
            observables["max_pop_b_error"] = float(np.max(np.abs(
                full.states[:, 1, 1] - red.states[:, 1, 1])))
        elif sc.model == "optomech":
            observables.update(_optomech_observables(sc, "steady_state" in sc.outputs))
    except (ValidationError, NumericalError) as exc:
        raise type(exc)(f"scenario {sc.name!r}: {exc}") from None

    residuals = {"check_structure": _finite(cmp.structure, "residual"),
                 "nz_consistency": nz.max_residual}
    summary = RunSummary(
        scenario=sc.name,
        model=sc.model,
        rates=_finite(cmp.rates, "rate"),
        observables=_finite(observables, "observable"),
        max_trace_distance=float(dist.max()),
        residuals=residuals,
        grid={"t0": sc.grid.t0, "t1": sc.grid.t1, "steps": sc.grid.steps,
              "substeps": sc.substeps},
        seed=sc.seed,
        duration=time.perf_counter() - start,
    )
    if not math.isfinite(summary.max_trace_distance) or not math.isfinite(nz.max_residual):
        raise NumericalError(f"scenario {sc.name!r}: non-finite metric")
    return RunResult(summary, full.times, full.observables, red.observables, dist)


def _csv_columns(names: Sequence[str]) -> list[str]:
    cols = ["t"]
    for k in names:
        cols += [f"{k}_full_re", f"{k}_full_im", f"{k}_reduced_re", f"{k}_reduced_im"]
    return cols + ["trace_distance"]


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_trajectory(result: RunResult, names: Sequence[str], path: Path):
    cols = [result.times]
    for k in names:
        f, r = result.full[k], result.reduced[k]
        cols += [f.real, f.imag, r.real, r.imag]
    cols.append(result.trace_distance)
    table = np.column_stack(cols)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(_csv_columns(names)) + "\n")
        for row in table:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def run(sc: Scenario, out_dir) -> tuple[Path, Path, RunSummary]:
    """Run a scenario and write ``<name>_trajectory.csv`` and ``<name>_summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = simulate(sc)
    csv_path = out / f"{sc.name}_trajectory.csv"
    json_path = out / f"{sc.name}_summary.json"
    write_trajectory(result, sc.observables, csv_path)
    with open(json_path, "w") as fh:
        json.dump(result.summary.as_json(), fh, indent=2, sort_keys=False, allow_nan=False)
        fh.write("\n")
    return csv_path, json_path, result.summary


# -- sweeps ---------------------------------------------------------------------------

SWEEP_COLUMNS = {
    "lambda": ("coupling_re", "coupling_im", "light_shift_a", "light_shift_b",
               "max_pop_b_error", "max_pop_e"),
    "optomech": ("gamma_h", "gamma_c", "delta_m", "cooperativity", "occupation",
                 "occupation_reduced_steady"),
    "random_bipartite": ("coupling", "bath_decay"),
}
SWEEP_COMMON = ("max_trace_distance", "check_structure", "nz_consistency")


def _set_path(doc: dict, path: str, value) -> dict:
    out = copy.deepcopy(doc)
    keys = path.split(".")
    node = out
    for k in keys[:-1]:
        if not isinstance(node, dict) or k not in node:
            raise ValidationError(f"unresolvable parameter path {path!r}")
        node = node[k]
    last = keys[-1]
    if not isinstance(node, dict) or last not in node:
        raise ValidationError(f"unresolvable parameter path {path!r}")
    old = node[last]
    if isinstance(old, bool) or not isinstance(old, (int, float, list)):
        raise ValidationError(f"parameter path {path!r} does not resolve to a scalar")
    if isinstance(old, list) and not (len(old) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in old)):
        raise ValidationError(f"parameter path {path!r} does not resolve to a scalar")
    node[last] = value
    return out


def _sweep_row(summary: RunSummary, model: str) -> list[float]:
    row = []
    for col in SWEEP_COLUMNS[model]:
        if col in summary.rates:
            row.append(summary.rates[col])
        elif col == "occupation":
            row.append(summary.observables["occupation_formula"])
        elif col in summary.observables:
            row.append(summary.observables[col])
        else:
            row.append(float("nan"))
    row.append(summary.max_trace_distance)
    row.append(max(summary.residuals["check_structure"].values()))
    row.append(summary.residuals["nz_consistency"])
    return row


def sweep(sc: Scenario, path: str, values: Sequence[float], out_dir) -> Path:
    """Run the scenario once per value of the dotted ``path`` (e.g. ``params.g``).

    Writes ``<name>_sweep.csv`` with one row per value, in input order.
    """
    rows = []
    # resolve the path up front so an empty sweep still rejects a bad path
    _set_path(sc.document, path, 0.0)
    for v in values:
        doc = _set_path(sc.document, path, v)
        summary = simulate(scenario_from_dict(doc)).summary
        rows.append([float(v)] + _sweep_row(summary, sc.model))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{sc.name}_sweep.csv"
    header = ["value"] + list(SWEEP_COLUMNS[sc.model]) + list(SWEEP_COMMON)
    with open(csv_path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return csv_path

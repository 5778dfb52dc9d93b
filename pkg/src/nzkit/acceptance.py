"""Built-in acceptance checks, shared by ``nzkit verify`` and the test suite.

Each check returns a :class:`CriterionResult`; tolerances are module
constants so they are pinned in one place.
"""

from __future__ import annotations

import filecmp
import tempfile
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .dynamics import TimeGrid, nz_consistency, propagate, steady_state
from .liouvillian import build_projector, check_structure, projector_residuals
from .models import LAMBDA_GROUND_BLOCK, build_lambda, build_optomech, random_bipartite
from .reductions import (
    LambdaParams,
    OptomechParams,
    adequate_cutoff,
    born_liouvillian,
    lambda_effective_hamiltonian,
    mean_field_split,
    restrict_generator,
    second_order_generator,
    sideband_rates,
    sideband_spectral,
    steady_occupation,
)
from .scenario import bipartite_markov_spec, run, scenario_from_dict, simulate
from .superop import commutator_superop, partial_trace, trace_distance

PROJECTOR_TOL = 1e-12
NZ_TOL = 1e-5
NZ_MIN_RATIO = 12.0
LAMBDA_POP_TOL = 0.02
LAMBDA_EXCITED_TOL = 1e-3
LAMBDA_CLOSED_FORM_TOL = 1e-10
SIDEBAND_REL_TOL = 1e-12
RESOLVED_REL_TOL = 1e-3
OCCUPATION_DISPLAY = 0.910
OCCUPATION_REDUCED_TOL = 1e-6
OCCUPATION_FULL_REL_TOL = 0.10
BORN_MIN_RATIO = 4.0

COOLING_PARAMS = dict(omega_m=10.0, delta=10.0, kappa=1.0, gamma_m=1e-3, nbar=10.0,
                      g=0.05, n_cav=4, n_mech=12)

LAMBDA_SCENARIO = {
    "name": "lambda",
    "model": "lambda",
    "params": {"omega_a": 1.0, "omega_b": 1.0, "delta": 0.0, "bigdelta": 50.0},
    # one effective Rabi period 2 pi / (2 |omega_a omega_b| / (4 bigdelta)) = 200 pi
    "grid": {"t0": 0.0, "t1": 200 * np.pi, "steps": 4000, "substeps": 40},
    "initial": "ground",
    "outputs": ["pop_b", "pop_e", "coherence_ab"],
}

COOLING_SCENARIO = {
    "name": "cooling",
    "model": "optomech",
    "params": dict(COOLING_PARAMS),
    "grid": {"t0": 0.0, "t1": 10.0, "steps": 2000},
    "initial": {"thermal": 1.0},
    "outputs": ["occupation", "steady_state"],
}


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    values: dict[str, float] = field(default_factory=dict)
    seconds: float = 0.0


def _timed(func: Callable[[], CriterionResult]) -> CriterionResult:
    start = time.perf_counter()
    res = func()
    res.seconds = time.perf_counter() - start
    return res


# 1 -------------------------------------------------------------------------------------


def projector_identities() -> CriterionResult:
    """Projector algebra and Liouvillian structure on the Lambda and optomech models."""
    worst = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lam = build_lambda(LambdaParams(1.0, 1.0, 0.0, 50.0))
        opt = build_optomech(OptomechParams(**{**COOLING_PARAMS, "n_mech": 4, "n_cav": 3}))
    for label, spec, rho_b, space in (
            ("lambda", lam.spec, lam.bath_state, lam.space),
            ("optomech", opt.spec_schrodinger, opt.bath_state, opt.space),
            ("optomech_interaction_picture", opt.spec_interaction, opt.bath_state, opt.space)):
        proj = build_projector(rho_b, space)
        res = {**projector_residuals(proj), **check_structure(spec, proj).as_dict()}
        worst[label] = max(res.values())
    m = max(worst.values())
    return CriterionResult("1 projector identities", m < PROJECTOR_TOL,
                           f"max residual {m:.2e} (< {PROJECTOR_TOL:g})", worst)


# 2 -------------------------------------------------------------------------------------


def nz_formal_solution(seed: int = 7, steps: int = 2000) -> CriterionResult:
    """Direct ``Q rho`` against the formal solution, and its refinement ratio."""
    model = random_bipartite(seed, coupling=1.0)
    proj = build_projector(model.bath_state, model.space)
    rho_s0 = np.diag([1.0, 0.0]).astype(complex)
    coarse = nz_consistency(model.spec, proj, rho_s0, TimeGrid(0.0, 2.0, steps)).max_residual
    fine = nz_consistency(model.spec, proj, rho_s0, TimeGrid(0.0, 2.0, 2 * steps)).max_residual
    ratio = coarse / fine if fine > 0 else np.inf
    ok = coarse <= NZ_TOL and ratio >= NZ_MIN_RATIO
    return CriterionResult(
        "2 NZ consistency", ok,
        f"residual {coarse:.2e} at {steps} steps, ratio {ratio:.1f} on doubling "
        f"(<= {NZ_TOL:g}, >= {NZ_MIN_RATIO:g})",
        {"residual": coarse, "residual_doubled": fine, "ratio": ratio})


# 3 -------------------------------------------------------------------------------------


def lambda_elimination() -> CriterionResult:
    """Full 3-level dynamics against the reduced 2-level evolution over one Rabi period."""
    s = simulate(scenario_from_dict(LAMBDA_SCENARIO)).summary
    err = s.observables["max_pop_b_error"]
    exc = s.observables["max_pop_e"]
    ok = err <= LAMBDA_POP_TOL and exc <= LAMBDA_EXCITED_TOL
    return CriterionResult(
        "3 Lambda elimination", ok,
        f"max |P_b full - reduced| {err:.2e} (<= {LAMBDA_POP_TOL:g}), "
        f"max P_e {exc:.2e} (<= {LAMBDA_EXCITED_TOL:g})",
        {"max_pop_b_error": err, "max_pop_e": exc})


# 4 -------------------------------------------------------------------------------------


def random_lambda_params(rng: np.random.Generator) -> LambdaParams:
    bigdelta = rng.choice([-1.0, 1.0]) * rng.uniform(20.0, 200.0)
    scale = abs(bigdelta) / 10

    def drive():
        return scale * rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform())

    return LambdaParams(drive(), drive(), scale * rng.uniform(-1, 1), bigdelta)


def lambda_bath_block(p: LambdaParams) -> np.ndarray:
    """Ground-block generator produced by the generic reducer for the Lambda model."""
    model = build_lambda(p)
    _, vprime = mean_field_split(model.interaction, model.bath_state)
    red = second_order_generator(model.lb, vprime, model.bath_state, method="fast_bath")
    return restrict_generator(red.generator, LAMBDA_GROUND_BLOCK)


def lambda_closed_form(draws: int = 20, seed: int = 2024) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        p = random_lambda_params(rng)
        model = build_lambda(p)
        expected = commutator_superop(lambda_effective_hamiltonian(p) - model.h_s)
        worst = max(worst, float(np.max(np.abs(lambda_bath_block(p) - expected))))
    return CriterionResult("4 Lambda closed form", worst <= LAMBDA_CLOSED_FORM_TOL,
                           f"max entry difference {worst:.2e} over {draws} draws "
                           f"(<= {LAMBDA_CLOSED_FORM_TOL:g})", {"max_difference": worst})


# 5 -------------------------------------------------------------------------------------


def sideband_checks(draws: int = 50, seed: int = 5) -> CriterionResult:
    """Closed-form sideband rates.

    The identity is checked in the form stated by the criterion,
    ``E+(w) = conj(E-(-w))``, and in the unconjugated form ``E+(w) = E-(-w)``
    that follows from ``E_lam(w) = 1/(i(delta + lam w) + kappa/2)``. Only
    the second holds for general real arguments.
    """
    g, kappa, omega_m = 0.05 + 0.02j, 0.7, 10.0
    p = OptomechParams(omega_m, omega_m, kappa, 1e-3, 10.0, g)
    _, gc, _ = sideband_rates(p)
    target = 4 * abs(g) ** 2 / kappa
    rel_gc = abs(gc - target) / target

    rng = np.random.default_rng(seed)
    conj_res = 0.0
    plain_res = 0.0
    for _ in range(draws):
        delta, w = rng.uniform(-20, 20, size=2)
        k = rng.uniform(0.01, 5)
        ep = sideband_spectral(delta, k, w, 1)
        conj_res = max(conj_res, abs(ep - np.conj(sideband_spectral(delta, k, -w, -1))) / abs(ep))
        plain_res = max(plain_res, abs(ep - sideband_spectral(delta, k, -w, -1)) / abs(ep))

    kappa_r = 0.05 * omega_m
    pr = OptomechParams(omega_m, omega_m, kappa_r, 1e-3, 10.0, 0.05)
    gh, gc_r, _ = sideband_rates(pr)
    x2 = (kappa_r / (4 * omega_m)) ** 2
    rel_resolved = abs(gh / gc_r - x2 / (1 + x2)) / (x2 / (1 + x2))
    rel_leading = abs(gh / gc_r - x2) / x2

    ok = (rel_gc < SIDEBAND_REL_TOL and conj_res < SIDEBAND_REL_TOL
          and rel_resolved < RESOLVED_REL_TOL and rel_leading < RESOLVED_REL_TOL)
    return CriterionResult(
        "5 sideband rates", ok,
        f"Gamma_c rel {rel_gc:.1e}; E+(w)=conj(E-(-w)) rel {conj_res:.1e} "
        f"[E+(w)=E-(-w) rel {plain_res:.1e}]; resolved ratio rel {rel_resolved:.1e}",
        {"gamma_c_rel": rel_gc, "identity_conj_rel": conj_res,
         "identity_plain_rel": plain_res, "resolved_rel": rel_resolved,
         "resolved_leading_rel": rel_leading})


# 6 -------------------------------------------------------------------------------------


def reduced_steady_occupation(p: OptomechParams) -> float:
    from .scenario import _optomech_reduced
    rho = steady_state(_optomech_reduced(p).static_part)
    return float(np.trace(rho @ np.diag(np.arange(p.n_mech, dtype=float))).real)


def cooling_end_to_end(full: bool = True) -> CriterionResult:
    p = OptomechParams(**COOLING_PARAMS)
    occ = steady_occupation(p)
    n = adequate_cutoff(occ)
    red = reduced_steady_occupation(p.replace(n_mech=n))
    red_12 = reduced_steady_occupation(p)
    values = {"formula": occ, "reduced": red, "reduced_cutoff": n, "reduced_n12": red_12}
    ok = abs(occ - OCCUPATION_DISPLAY) < 5e-4 and abs(red - occ) <= OCCUPATION_REDUCED_TOL
    detail = (f"formula {occ:.6f}; reduced (n_mech={n}) diff {abs(red - occ):.1e} "
              f"(<= {OCCUPATION_REDUCED_TOL:g}); reduced at n_mech=12 diff "
              f"{abs(red_12 - occ):.1e} [diagnostic]")
    if full:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = build_optomech(p)
        rho = steady_state(model.spec_schrodinger.static_part)
        occ_full = float(np.trace(rho @ model.ops["n_mech"]).real)
        rel = abs(occ_full - occ) / occ
        values.update(full=occ_full, full_rel=rel)
        ok = ok and rel <= OCCUPATION_FULL_REL_TOL
        detail += f"; full {occ_full:.4f} rel {rel:.1e} (<= {OCCUPATION_FULL_REL_TOL:g})"
    return CriterionResult("6 cooling end-to-end", ok, detail, values)


# 7 -------------------------------------------------------------------------------------

WEAK_COUPLINGS = (0.2, 0.1, 0.05)
WEAK_GRID = TimeGrid(0.0, 10.0, 2000)
WEAK_SEEDS = (0, 1, 2, 3, 4)


def born_distance(seed: int, coupling: float, markov: bool = False) -> float:
    """Max trace distance between exact and second-order reduced system states."""
    model = random_bipartite(seed, coupling=coupling)
    proj = build_projector(model.bath_state, model.space)
    rho_s0 = np.diag([1.0, 0.0]).astype(complex)
    full = propagate(model.spec, np.kron(rho_s0, model.bath_state), WEAK_GRID, validate=False)
    if markov:
        red = propagate(bipartite_markov_spec(model), rho_s0, WEAK_GRID, validate=False)
        reduced = red.states
    else:
        born = propagate(born_liouvillian(model.spec, proj, model.interaction),
                         np.kron(rho_s0, model.bath_state), WEAK_GRID, validate=False)
        reduced = [partial_trace(r, model.space, 0) for r in born.states]
    return max(trace_distance(partial_trace(f, model.space, 0), r)
               for f, r in zip(full.states, reduced))


def weak_coupling_order() -> CriterionResult:
    ratios = []
    markov_ratios = []
    for seed in WEAK_SEEDS:
        d = [born_distance(seed, c) for c in WEAK_COUPLINGS]
        ratios += [d[i] / d[i + 1] for i in range(len(d) - 1)]
        dm = [born_distance(seed, c, markov=True) for c in WEAK_COUPLINGS[:2]]
        markov_ratios.append(dm[0] / dm[1])
    lo = min(ratios)
    return CriterionResult(
        "7 weak-coupling order", lo >= BORN_MIN_RATIO,
        f"Born halving ratios {lo:.2f}..{max(ratios):.2f} (>= {BORN_MIN_RATIO:g}); "
        f"Markov generator {min(markov_ratios):.2f}..{max(markov_ratios):.2f} [diagnostic]",
        {"min_ratio": lo, "max_ratio": max(ratios), "markov_min_ratio": min(markov_ratios)})


# 8 -------------------------------------------------------------------------------------


def determinism() -> CriterionResult:
    sc = scenario_from_dict(COOLING_SCENARIO)
    with tempfile.TemporaryDirectory() as tmp:
        a, b = Path(tmp, "a"), Path(tmp, "b")
        csv_a, json_a, _ = run(sc, a)
        csv_b, json_b, _ = run(sc, b)
        same_csv = filecmp.cmp(csv_a, csv_b, shallow=False)
        same_json = filecmp.cmp(json_a, json_b, shallow=False)
    return CriterionResult("8 determinism", same_csv and same_json,
                           f"CSV identical: {same_csv}, JSON identical: {same_json}")


CRITERIA = (projector_identities, nz_formal_solution, lambda_elimination, lambda_closed_form,
            sideband_checks, cooling_end_to_end, weak_coupling_order, determinism)


def run_all(quick: bool = False) -> list[CriterionResult]:
    out = []
    for func in CRITERIA:
        if quick and func is determinism:
            continue
        if quick and func is cooling_end_to_end:
            out.append(_timed(lambda: cooling_end_to_end(full=False)))
            continue
        out.append(_timed(func))
    return out

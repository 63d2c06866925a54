"""Outer alternating-optimization loops, scheme registry, and the sweep engine.

Each outer iteration refreshes the surface phases (penalty SCA), then the
power split, then the common-rate split, all against honestly recomputed
composite gains, so every accepted iterate is feasible by construction.  A
monotone safeguard keeps the covert-rate trace nondecreasing: an update that
would lower the rate is discarded and the loop stops.

Schemes report a covert rate of exactly zero when no private power can be
allocated (the two hypotheses then coincide and nothing covert is sent).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import alloc as alloc_mod
from .beamforming import (extract_phases, noma_gain_floor, psca_noma,
                          psca_rsma, rsma_gain_floor)
from .channel import (ChannelRealization, build_lifted, composite_gains,
                      cophased_theta_r, cophased_theta_t, sample_channels)
from .covert import DetectionContext, madep, madep_manifold, mc_min_dep
from .errors import Infeasible
from .rates import NomaAllocation, PowerAllocation, RateAllocation, noma_rates, rsma_rates
from .scenario import Scenario, derive_path_losses, with_updates

_MONOTONE_TOL = 1e-12


@dataclass
class SchemeResult:
    """Final operating point of one scheme on one channel realization."""

    scheme: str
    covert_rate: float
    r_b: float
    r_g: float
    alloc: object
    beta: Optional[RateAllocation]
    theta_r: np.ndarray
    theta_t: np.ndarray
    z_ab2: float
    z_ag2: float
    madep_value: float
    feasible: bool
    certified: bool
    failure: str = ""


@dataclass
class AoTrace:
    """Per-outer-iteration records plus the termination reason and final point."""

    records: list
    termination: str
    result: Optional[SchemeResult]
    bf_history: list = field(default_factory=list)

    @property
    def objectives(self):
        return [rec["r_b"] for rec in self.records]


def _base_context(scenario, losses, reflection_enabled=True):
    lam_n = losses.lambda_n if reflection_enabled else 0.0
    return DetectionContext(
        delta1=scenario.pt / losses.l_aw,
        delta2=scenario.pt / losses.l_aw,
        phi=losses.phi,
        lambda_n=lam_n,
        lambda_aw=scenario.lambda_aw,
        sigma2_w=scenario.sigma2_w,
    )


def _gains(realization, theta_r, theta_t, losses, reflection_enabled=True):
    g = composite_gains(realization, theta_r, theta_t, losses)
    if not reflection_enabled:
        return g.nu_b2, g.z_ag2, g.nu_b2
    return g.z_ab2, g.z_ag2, g.nu_b2


def certify_rsma(result: SchemeResult, scenario, losses, ctx, omega):
    """Independent feasibility re-check of a returned RSMA solution."""
    rr = rsma_rates(result.z_ab2, result.z_ag2, scenario.pt, scenario.sigma2_b,
                    scenario.sigma2_g, result.alloc, result.beta, omega)
    ok_qos = rr.r_g >= scenario.rg_min - 1e-6
    ok_covert = madep(result.alloc, ctx) >= 1.0 - scenario.epsilon - 1e-6
    return ok_qos and ok_covert


def certify_noma(result: SchemeResult, scenario, ctx, omega):
    _, _, r_g_sg = noma_rates(result.z_ab2, result.z_ag2, scenario.pt,
                              scenario.sigma2_b, scenario.sigma2_g, result.alloc, omega)
    ok_qos = r_g_sg >= scenario.rg_min - 1e-6
    ok_covert = float(madep_manifold(result.alloc.a1_bar, ctx)) >= 1.0 - scenario.epsilon - 1e-6
    return ok_qos and ok_covert


def algorithm2(scenario: Scenario, realization: ChannelRealization,
               rng: Optional[np.random.Generator] = None, omega=0.0,
               fixed_beta1=None, phase_mode="optimize", reflection_enabled=True,
               max_outer=50, scheme_name="rsma_ao") -> AoTrace:
    """RSMA covert-rate maximization by alternating optimization.

    phase_mode 'optimize' runs penalty SCA each outer iteration (reusing the
    previous matrices when the Grace floor stays slack); 'random' freezes the
    initial random phases; 'cophased' freezes analytically aligned phases.
    fixed_beta1 pins the common-rate split instead of optimizing it.
    """
    rng = rng if rng is not None else np.random.default_rng(scenario.seed)
    losses = derive_path_losses(scenario)
    lifted = build_lifted(realization, losses)
    ctx = _base_context(scenario, losses, reflection_enabled)
    xi1 = alloc_mod.xi1_covertness_bound(scenario.epsilon, ctx)
    pt, s2b, s2g = scenario.pt, scenario.sigma2_b, scenario.sigma2_g

    def beta_step(a_sol_alloc, z_ab2, z_ag2):
        if fixed_beta1 is not None:
            return RateAllocation(b1=fixed_beta1, b2=1.0 - fixed_beta1)
        return alloc_mod.optimal_beta(z_ab2, z_ag2, pt, s2b, s2g, a_sol_alloc,
                                      scenario.rg_min, omega)

    def alloc_beta_rate(z_ab2, z_ag2, beta_prev):
        sol = alloc_mod.algorithm1(z_ab2, z_ag2, pt, s2b, s2g, scenario.rg_min,
                                   beta_prev, scenario.epsilon, ctx,
                                   zeta1=scenario.zeta1, omega=omega, xi1=xi1)
        beta_new = beta_step(sol.alloc, z_ab2, z_ag2)
        rr = rsma_rates(z_ab2, z_ag2, pt, s2b, s2g, sol.alloc, beta_new, omega)
        return sol.alloc, beta_new, rr

    if phase_mode == "cophased":
        theta_r = cophased_theta_r(lifted)
        theta_t = cophased_theta_t(lifted)
    else:
        theta_r = rng.uniform(0.0, 2.0 * np.pi, scenario.k_n)
        theta_t = rng.uniform(0.0, 2.0 * np.pi, scenario.k_m)
    beta = RateAllocation(b1=fixed_beta1, b2=1.0 - fixed_beta1) \
        if fixed_beta1 is not None else RateAllocation(0.5, 0.5)

    records = []
    bf_history = []
    state = None
    termination = "max_iter"
    z_ab2, z_ag2, _ = _gains(realization, theta_r, theta_t, losses, reflection_enabled)
    try:
        try:
            cur_alloc, beta, rr = alloc_beta_rate(z_ab2, z_ag2, beta)
        except Infeasible:
            if phase_mode != "optimize":
                raise
            # random initialization can be infeasible; restart from aligned phases
            theta_r = cophased_theta_r(lifted)
            theta_t = cophased_theta_t(lifted)
            z_ab2, z_ag2, _ = _gains(realization, theta_r, theta_t, losses, reflection_enabled)
            cur_alloc, beta, rr = alloc_beta_rate(z_ab2, z_ag2, beta)
    except Infeasible as exc:
        return AoTrace(records=[], termination=f"infeasible:{exc.constraint}",
                       result=_infeasible_result(scheme_name, exc))
    r_prev = rr.r_b
    records.append(_record(0, rr.r_b, cur_alloc, beta, state, 0.0))

    t0 = time.perf_counter()
    for ell in range(1, max_outer + 1):
        if phase_mode == "optimize" and reflection_enabled:
            try:
                floor = rsma_gain_floor(cur_alloc, beta.b2, pt, s2g, scenario.rg_min,
                                        omega, lifted=lifted)
                reuse = (state is not None
                         and state.penalty_value <= scenario.zeta2
                         and float(np.real(np.vdot(lifted.h_g, state.u_t)))
                         >= floor * (1.0 - 1e-4))
                if not reuse:
                    state = psca_rsma(lifted, floor, state0=state, rho0=scenario.rho0,
                                      c1=scenario.c1, zeta2=scenario.zeta2, rng=rng)
                    bf_history.extend(dict(rec, outer=ell) for rec in state.history)
                theta_r_new, theta_t_new, _ = extract_phases(state)
            except (Infeasible, ValueError) as exc:
                # a later subproblem stalling cannot invalidate the feasible
                # incumbent; keep it and stop
                termination = f"stalled:{getattr(exc, 'constraint', 'rank_residual')}"
                break
        else:
            theta_r_new, theta_t_new = theta_r, theta_t
        z_ab2_new, z_ag2_new, _ = _gains(realization, theta_r_new, theta_t_new,
                                         losses, reflection_enabled)
        try:
            alloc_new, beta_new, rr = alloc_beta_rate(z_ab2_new, z_ag2_new, beta)
        except Infeasible as exc:
            termination = f"stalled:{exc.constraint}"
            break
        if rr.r_b < r_prev - _MONOTONE_TOL:
            termination = "converged"  # safeguard: keep the previous iterate
            break
        theta_r, theta_t = theta_r_new, theta_t_new
        z_ab2, z_ag2 = z_ab2_new, z_ag2_new
        cur_alloc, beta = alloc_new, beta_new
        records.append(_record(ell, rr.r_b, cur_alloc, beta, state,
                               time.perf_counter() - t0))
        if rr.r_b - r_prev < scenario.zeta3:
            termination = "converged"
            break
        r_prev = rr.r_b

    rr = rsma_rates(z_ab2, z_ag2, pt, s2b, s2g, cur_alloc, beta, omega)
    covert_rate = rr.r_b if cur_alloc.a1 > 0.0 else 0.0
    result = SchemeResult(
        scheme=scheme_name, covert_rate=covert_rate, r_b=rr.r_b, r_g=rr.r_g,
        alloc=cur_alloc, beta=beta, theta_r=theta_r, theta_t=theta_t,
        z_ab2=z_ab2, z_ag2=z_ag2, madep_value=madep(cur_alloc, ctx),
        feasible=True, certified=False,
    )
    result.certified = certify_rsma(result, scenario, losses, ctx, omega)
    return AoTrace(records=records, termination=termination, result=result,
                   bf_history=bf_history)


def algorithm3(scenario: Scenario, realization: ChannelRealization,
               rng: Optional[np.random.Generator] = None, omega=0.0,
               phase_mode="optimize", max_outer=50,
               scheme_name="noma_ao") -> AoTrace:
    """NOMA benchmark: alternating power split and beamforming for Bob's private rate."""
    rng = rng if rng is not None else np.random.default_rng(scenario.seed)
    losses = derive_path_losses(scenario)
    lifted = build_lifted(realization, losses)
    ctx = _base_context(scenario, losses)
    xi1 = alloc_mod.xi1_covertness_bound(scenario.epsilon, ctx)
    pt, s2b, s2g = scenario.pt, scenario.sigma2_b, scenario.sigma2_g

    theta_r = rng.uniform(0.0, 2.0 * np.pi, scenario.k_n)
    theta_t = rng.uniform(0.0, 2.0 * np.pi, scenario.k_m)
    if phase_mode == "cophased":
        theta_r, theta_t = cophased_theta_r(lifted), cophased_theta_t(lifted)
    z_ab2, z_ag2, _ = _gains(realization, theta_r, theta_t, losses)

    def power_and_rate(z_ab2_v, z_ag2_v):
        na = alloc_mod.noma_power(z_ag2_v, pt, s2g, scenario.rg_min,
                                  scenario.epsilon, ctx, xi1=xi1)
        _, r_b_sb, r_g_sg = noma_rates(z_ab2_v, z_ag2_v, pt, s2b, s2g, na, omega)
        return na, r_b_sb, r_g_sg

    records = []
    bf_history = []
    state = None
    termination = "max_iter"
    try:
        try:
            na, r_prev, _ = power_and_rate(z_ab2, z_ag2)
        except Infeasible:
            if phase_mode != "optimize":
                raise
            theta_r, theta_t = cophased_theta_r(lifted), cophased_theta_t(lifted)
            z_ab2, z_ag2, _ = _gains(realization, theta_r, theta_t, losses)
            na, r_prev, _ = power_and_rate(z_ab2, z_ag2)
    except Infeasible as exc:
        return AoTrace(records=[], termination=f"infeasible:{exc.constraint}",
                       result=_infeasible_result(scheme_name, exc))
    records.append(_record(0, r_prev, na, None, state, 0.0))

    t0 = time.perf_counter()
    for ell in range(1, max_outer + 1):
        if phase_mode == "optimize":
            try:
                floor = noma_gain_floor(na, pt, s2g, scenario.rg_min)
                reuse = (state is not None
                         and state.penalty_value <= scenario.zeta2
                         and float(np.real(np.vdot(lifted.h_g, state.u_t)))
                         >= floor * (1.0 - 1e-4))
                if not reuse:
                    state = psca_noma(lifted, floor, state0=state, rho0=scenario.rho0,
                                      c1=scenario.c1, zeta2=scenario.zeta2, rng=rng)
                    bf_history.extend(dict(rec, outer=ell) for rec in state.history)
                theta_r_new, theta_t_new, _ = extract_phases(state)
            except (Infeasible, ValueError) as exc:
                termination = f"stalled:{getattr(exc, 'constraint', 'rank_residual')}"
                break
        else:
            theta_r_new, theta_t_new = theta_r, theta_t
        z_ab2_new, z_ag2_new, _ = _gains(realization, theta_r_new, theta_t_new, losses)
        try:
            na_new, r_new, _ = power_and_rate(z_ab2_new, z_ag2_new)
        except Infeasible as exc:
            termination = f"stalled:{exc.constraint}"
            break
        if r_new < r_prev - _MONOTONE_TOL:
            termination = "converged"
            break
        theta_r, theta_t = theta_r_new, theta_t_new
        z_ab2, z_ag2 = z_ab2_new, z_ag2_new
        na = na_new
        records.append(_record(ell, r_new, na, None, state, time.perf_counter() - t0))
        if r_new - r_prev < scenario.zeta3:
            termination = "converged"
            break
        r_prev = r_new

    _, r_b_sb, r_g_sg = noma_rates(z_ab2, z_ag2, pt, s2b, s2g, na, omega)
    covert_rate = r_b_sb if na.a1_bar > 0.0 else 0.0
    result = SchemeResult(
        scheme=scheme_name, covert_rate=covert_rate, r_b=r_b_sb, r_g=r_g_sg,
        alloc=na, beta=None, theta_r=theta_r, theta_t=theta_t,
        z_ab2=z_ab2, z_ag2=z_ag2,
        madep_value=float(madep_manifold(na.a1_bar, ctx)),
        feasible=True, certified=False,
    )
    result.certified = certify_noma(result, scenario, ctx, omega)
    return AoTrace(records=records, termination=termination, result=result,
                   bf_history=bf_history)


def _record(ell, r_b, alloc_obj, beta, state, wall):
    rec = {"iter": ell, "r_b": r_b, "wall_time": wall}
    if isinstance(alloc_obj, PowerAllocation):
        rec.update(a0=alloc_obj.a0, a1=alloc_obj.a1, a2=alloc_obj.a2)
    elif isinstance(alloc_obj, NomaAllocation):
        rec.update(a1_bar=alloc_obj.a1_bar, a2_bar=alloc_obj.a2_bar)
    if beta is not None:
        rec.update(b1=beta.b1, b2=beta.b2)
    if state is not None:
        rec.update(bf_objective=state.gain_objective, penalty_value=state.penalty_value)
    return rec


def _infeasible_result(scheme_name, exc):
    return SchemeResult(
        scheme=scheme_name, covert_rate=math.nan, r_b=math.nan, r_g=math.nan,
        alloc=None, beta=None, theta_r=np.zeros(0), theta_t=np.zeros(0),
        z_ab2=math.nan, z_ag2=math.nan, madep_value=math.nan,
        feasible=False, certified=False, failure=str(exc),
    )


# --- scheme registry ---------------------------------------------------------

def _run_scheme(name, scenario, realization, rng, fixed_beta1=0.5):
    if name == "rsma_ao":
        return algorithm2(scenario, realization, rng, omega=0.0, scheme_name=name)
    if name == "rsma_ao_isic":
        return algorithm2(scenario, realization, rng, omega=scenario.omega, scheme_name=name)
    if name == "rsma_fixed_beta":
        return algorithm2(scenario, realization, rng, omega=0.0,
                          fixed_beta1=fixed_beta1, scheme_name=name)
    if name == "rsma_random_phase":
        return algorithm2(scenario, realization, rng, omega=0.0,
                          phase_mode="random", scheme_name=name)
    if name == "no_ris":
        return algorithm2(scenario, realization, rng, omega=0.0, phase_mode="cophased",
                          reflection_enabled=False, scheme_name=name)
    if name == "noma_ao":
        return algorithm3(scenario, realization, rng, omega=0.0, scheme_name=name)
    if name == "noma_ao_isic":
        return algorithm3(scenario, realization, rng, omega=scenario.omega, scheme_name=name)
    if name == "noma_random_phase":
        return algorithm3(scenario, realization, rng, omega=0.0,
                          phase_mode="random", scheme_name=name)
    raise ValueError(f"unknown scheme {name!r}")


RATE_SCHEMES = ("rsma_ao", "rsma_ao_isic", "rsma_fixed_beta", "rsma_random_phase",
                "no_ris", "noma_ao", "noma_ao_isic", "noma_random_phase")
MADEP_SCHEMES = ("madep_closed", "madep_mc")


@dataclass
class SweepSpec:
    """One experiment axis: parameter name, values, schemes, averaging depth."""

    param: str
    values: list
    schemes: list
    realizations: int = 1
    seed: int = 0
    fixed_beta1: float = 0.5
    madep_a1: float = 0.2
    mc_channel: int = 100_000
    mc_noise: int = 10_000

    _PARAMS = ("pt_dbm", "epsilon", "rg_min", "k_n", "ris_x", "a0", "a1")

    def __post_init__(self):
        if self.param not in self._PARAMS:
            raise ValueError(f"unknown sweep parameter {self.param!r}")
        if not self.values:
            raise ValueError("sweep needs a nonempty value list")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        unknown = [s for s in self.schemes if s not in RATE_SCHEMES + MADEP_SCHEMES]
        if unknown:
            raise ValueError(f"unknown schemes: {unknown}")


def _scenario_at(scenario, param, value):
    if param in ("pt_dbm", "epsilon", "rg_min"):
        return with_updates(scenario, **{param: value})
    if param == "k_n":
        return with_updates(scenario, k_n=int(value), k_m=scenario.k - int(value))
    if param == "ris_x":
        return with_updates(scenario, pos_ris=(float(value), scenario.pos_ris[1]))
    return scenario  # a0 / a1 sweeps vary the allocation, not the scenario


def _madep_point(scheme, spec, scenario, value, rng):
    losses = derive_path_losses(scenario)
    ctx = _base_context(scenario, losses)
    if spec.param == "a1":
        a1 = float(value)
    else:
        a1 = spec.madep_a1
    if scheme == "madep_closed":
        return float(madep_manifold(a1, ctx))
    cond = DetectionContext(ctx.delta2 * (1.0 - a1), ctx.delta2, ctx.phi,
                            ctx.lambda_n, ctx.lambda_aw, ctx.sigma2_w)
    return mc_min_dep(cond, spec.mc_channel, spec.mc_noise, rng).madep


def run_sweep(spec: SweepSpec, scenario: Scenario):
    """Run every (value, scheme, realization) cell and aggregate rows.

    Channel draws are shared across schemes at a fixed (value, realization)
    and across values whenever the parameter does not change the surface
    split, so curves are comparable.  Failures are recorded in-row.
    """
    rows = []
    for vi, value in enumerate(spec.values):
        sc_v = _scenario_at(scenario, spec.param, value)
        for si, scheme in enumerate(spec.schemes):
            samples = []
            failures = 0
            for r in range(spec.realizations):
                chan_key = [spec.seed, 7, r] if spec.param != "k_n" else [spec.seed, 7, r, vi]
                alg_key = [spec.seed, 11, r, vi, si]
                if scheme in MADEP_SCHEMES:
                    val = _madep_point(scheme, spec, sc_v, value,
                                       np.random.default_rng(np.random.SeedSequence(alg_key)))
                    samples.append(val)
                    continue
                chan_rng = np.random.default_rng(np.random.SeedSequence(chan_key))
                realization = sample_channels(sc_v, chan_rng)
                alg_rng = np.random.default_rng(np.random.SeedSequence(alg_key))
                trace = _run_scheme(scheme, sc_v, realization, alg_rng,
                                    fixed_beta1=spec.fixed_beta1)
                if trace.result is not None and trace.result.feasible:
                    samples.append(trace.result.covert_rate)
                else:
                    failures += 1
            metric = "madep" if scheme in MADEP_SCHEMES else "covert_rate"
            n = len(samples)
            if n:
                mean = float(np.mean(samples))
                stderr = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
            else:
                mean = math.nan
                stderr = math.nan
            rows.append({
                "param": spec.param, "value": value, "scheme": scheme,
                "metric": metric, "mean": mean, "stderr": stderr,
                "n": n, "failures": failures, "seed": spec.seed,
            })
    return rows


SWEEP_COLUMNS = ("param", "value", "scheme", "metric", "mean", "stderr", "n",
                 "failures", "seed")


def rows_to_csv(rows, columns=SWEEP_COLUMNS):
    """Render result rows as deterministic CSV text (repr-formatted floats)."""
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            v = row.get(col, "")
            cells.append(repr(v) if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"

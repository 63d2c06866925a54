"""Closed-form power allocation, common-rate allocation, and NOMA power split.

Power allocation alternates two closed-form updates: given the common share
a0, the covert share a1 takes the largest value allowed by the power budget,
the covertness bound xi1 (inverse MADEP), and Grace's rate target, while
Grace's private share a2 takes the smallest value that restores her target.
The leftover budget then folds back into a0.  The optimum always exhausts the
power budget, so the loop runs on the a0+a1+a2 = 1 manifold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .covert import DetectionContext, madep, madep_inverse
from .errors import Infeasible
from .rates import NomaAllocation, PowerAllocation, RateAllocation, rsma_rates

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class AllocationSolution:
    """Result of the power-allocation loop: splits, achieved rate, binding bound."""

    alloc: PowerAllocation
    beta: RateAllocation
    r_b: float
    feasible: bool
    binding: str


def xi1_covertness_bound(epsilon, ctx: DetectionContext):
    """Largest covert share a1 compatible with MADEP >= 1 - epsilon (the bound Xi_1)."""
    return madep_inverse(1.0 - epsilon, ctx)


def _common_cap(a0, budget, z_ab2, z_ag2, pt, sigma2_b, sigma2_g):
    # both users must decode the common stream; the cap is the weaker link's
    # rate (equal to Grace's under the usual gain ordering)
    caps = []
    for gain, noise in ((z_ab2, sigma2_b), (z_ag2, sigma2_g)):
        if gain > 0.0:
            caps.append(math.log2(1.0 + a0 * pt * gain / (budget * pt * gain + noise)))
        else:
            caps.append(0.0)
    return min(caps)


def optimal_a12_given_a0(a0, z_ab2, z_ag2, pt, sigma2_b, sigma2_g, rg_min, beta2,
                         xi1, omega=0.0):
    """Closed-form (a1, a2) for a fixed common share a0, on the full-power manifold.

    If Grace's common-rate share already meets her target, all remaining power
    goes to the covert stream (up to xi1) and a2 = 0; otherwise a1 is
    additionally capped so that the private top-up a2 still fits, and a2 is
    the exact top-up.  Raises Infeasible when the target is unreachable even
    with a1 = 0.
    """
    budget = 1.0 - a0
    r_g_c = beta2 * _common_cap(a0, budget, z_ab2, z_ag2, pt, sigma2_b, sigma2_g)
    if r_g_c >= rg_min:
        a1 = min(budget, xi1)
        return a1, 0.0, ("covertness" if xi1 < budget else "power_budget")
    gap = 2.0 ** (rg_min - r_g_c)  # SINR factor Grace's private stream must supply
    if z_ag2 <= 0.0:
        raise Infeasible("grace_qos", "no transmission-side gain and common rate short")
    xi2 = (budget * pt * z_ag2 - (gap - 1.0) * (omega * a0 * pt * z_ag2 + sigma2_g)) \
        / (pt * z_ag2 * gap)
    if xi2 < 0.0:
        raise Infeasible("grace_qos", "rate target unreachable even with a1 = 0")
    a1 = max(0.0, min(budget, xi1, xi2))
    xi3 = (gap - 1.0) * ((omega * a0 + a1) * pt * z_ag2 + sigma2_g) / (pt * z_ag2)
    a2 = min(max(xi3, 0.0), budget - a1)
    caps = {"power_budget": budget, "covertness": xi1, "grace_qos": xi2}
    binding = min(caps, key=caps.get)
    return a1, a2, binding


def _one_pass(a0_init, z_ab2, z_ag2, pt, sigma2_b, sigma2_g, rg_min, beta,
              xi1, omega, zeta1, max_iter):
    a0 = a0_init
    r_prev = -math.inf
    best = None
    binding = "power_budget"
    for _ in range(max_iter):
        a1, a2, binding = optimal_a12_given_a0(a0, z_ab2, z_ag2, pt, sigma2_b,
                                               sigma2_g, rg_min, beta.b2, xi1, omega)
        a0 = max(0.0, 1.0 - a1 - a2)
        alloc = PowerAllocation(a0=a0, a1=a1, a2=a2)
        r_b = rsma_rates(z_ab2, z_ag2, pt, sigma2_b, sigma2_g, alloc, beta, omega).r_b
        if r_b < r_prev - _SUM_TOL:
            break  # keep the previous (better) iterate
        best = (alloc, r_b, binding)
        if r_b - r_prev < zeta1:
            break
        r_prev = r_b
    return best


def _common_rate_boundary(z_ab2, z_ag2, pt, sigma2_b, sigma2_g, rg_min, beta2):
    """Smallest a0 whose common-rate share alone meets Grace's target.

    Solves beta2 * log2(1 + a0*G/((1-a0)*G + 1)) = rg_min for a0, with G the
    weaker link's SNR budget (the common cap).  Returns None when unreachable.
    """
    if rg_min <= 0.0:
        return 0.0
    g = min(pt * z_ab2 / sigma2_b, pt * z_ag2 / sigma2_g)
    if g <= 0.0 or beta2 <= 0.0:
        return None
    q = 2.0 ** (rg_min / beta2)
    a0 = (q - 1.0) * (g + 1.0) / (g * q)
    return a0 if a0 <= 1.0 else None


def algorithm1(z_ab2, z_ag2, pt, sigma2_b, sigma2_g, rg_min, beta: RateAllocation,
               epsilon, ctx: DetectionContext, zeta1=1e-4, omega=0.0,
               a0_init=0.5, xi1=None, max_iter=200) -> AllocationSolution:
    """Alternating closed-form power allocation.

    Runs the a0 <-> (a1, a2) fixed-point loop until the covert rate gains less
    than zeta1 and keeps the best endpoint over a small set of deterministic
    starts.  Every a0 with slack commons and 1-a0 <= xi1 is a fixed point of
    the update map, so besides a0_init the loop is restarted from 0, from the
    boundary a0 where the common rate exactly meets Grace's target, and from
    1-xi1 (the corners where the best fixed point can sit).  The objective
    sequence within each pass is nondecreasing by construction.
    """
    if xi1 is None:
        xi1 = xi1_covertness_bound(epsilon, ctx)
    best = None
    starts = [a0_init, 0.0]
    boundary = _common_rate_boundary(z_ab2, z_ag2, pt, sigma2_b, sigma2_g,
                                     rg_min, beta.b2)
    if boundary is not None:
        starts.append(min(max(boundary, 0.0), 1.0))
    starts.append(max(0.0, 1.0 - xi1))
    seen = set()
    starts = [s for s in starts if not (s in seen or seen.add(s))]
    last_error = None
    for start in starts:
        try:
            cand = _one_pass(start, z_ab2, z_ag2, pt, sigma2_b, sigma2_g, rg_min,
                             beta, xi1, omega, zeta1, max_iter)
        except Infeasible as exc:
            last_error = exc
            continue
        if cand is not None and (best is None or cand[1] > best[1]):
            best = cand
    if best is None:
        raise last_error if last_error is not None else Infeasible("power_allocation")
    alloc, r_b, binding = best
    feasible = madep(alloc, ctx) >= 1.0 - epsilon - 1e-6
    return AllocationSolution(alloc=alloc, beta=beta, r_b=r_b,
                              feasible=feasible, binding=binding)


def optimal_beta(z_ab2, z_ag2, pt, sigma2_b, sigma2_g, alloc: PowerAllocation,
                 rg_min, omega=0.0) -> RateAllocation:
    """Smallest common-rate share for Grace that meets her target (bound Xi_4).

    The denominator is the rate Grace's share actually buys: her own
    common-stream rate under the usual gain ordering, the weaker link's rate
    otherwise.  Clamped to [0, 1]; infeasible when even the whole common rate
    cannot close the gap.
    """
    a0, a1, a2 = alloc.a0, alloc.a1, alloc.a2
    r_c = _common_cap(a0, a1 + a2, z_ab2, z_ag2, pt, sigma2_b, sigma2_g)
    if z_ag2 > 0.0:
        r_g_s2 = math.log2(1.0 + a2 * pt * z_ag2 / ((omega * a0 + a1) * pt * z_ag2 + sigma2_g))
    else:
        r_g_s2 = 0.0
    if r_c <= 0.0:
        if r_g_s2 >= rg_min:
            return RateAllocation(b1=1.0, b2=0.0)
        raise Infeasible("grace_qos", "no common rate available to close the gap")
    xi4 = (rg_min - r_g_s2) / r_c
    if xi4 > 1.0:
        raise Infeasible("grace_qos", f"needs common-rate share {xi4:.3f} > 1")
    b2 = min(max(xi4, 0.0), 1.0)
    return RateAllocation(b1=1.0 - b2, b2=b2)


def noma_power(z_ag2, pt, sigma2_g, rg_min, epsilon, ctx: DetectionContext,
               xi1=None) -> NomaAllocation:
    """Largest covert NOMA share under decode order, covertness, and Grace's target.

    a1_bar = min(1/2, xi1, xi5) with xi5 from Grace's SINR threshold; the rest
    of the budget goes to Grace's signal.
    """
    if xi1 is None:
        xi1 = xi1_covertness_bound(epsilon, ctx)
    gamma = 2.0 ** rg_min - 1.0
    caps = {"decode_order": 0.5, "covertness": xi1}
    if gamma > 0.0:
        if z_ag2 <= 0.0:
            raise Infeasible("grace_qos", "no transmission-side gain for the NOMA target")
        xi5 = (pt * z_ag2 - gamma * sigma2_g) / ((1.0 + gamma) * z_ag2 * pt)
        if xi5 < 0.0:
            raise Infeasible("grace_qos", "NOMA rate target unreachable")
        caps["grace_qos"] = xi5
    a1_bar = min(caps.values())
    return NomaAllocation(a1_bar=a1_bar, a2_bar=1.0 - a1_bar)

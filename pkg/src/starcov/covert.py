"""Warden-side analysis: detection-error probability and its closed forms.

The warden compares the long-run average received power against a threshold.
Conditioned on the direct-link gain |h_aw|^2, the cascaded reflection power it
cannot predict is exponentially distributed (Gaussian approximation of the
cascade), which yields a piecewise-exponential detection-error probability
(DEP), a closed-form optimal threshold, and a closed-form minimum average DEP
(MADEP) after averaging over the unknown direct link.

A Monte Carlo oracle built on the same received-power model validates every
closed form; it shares the Gaussian approximation on purpose, because the
closed forms are derived under it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rates import PowerAllocation

_A1_GUARD = 1e-9
_SINGULAR_GUARD = 1e-9


@dataclass(frozen=True)
class DetectionContext:
    """Everything the warden-side formulas need.

    delta1/delta2 are the scaled received power levels of the cover-only and
    full transmissions over the direct link; phi is the loss ratio
    l_ar*l_rw/l_aw; lambda_n the effective cascade variance; lambda_aw the
    direct-link fading variance.  h_aw2 conditions on a specific direct-link
    gain and may be None for averaged quantities.
    """

    delta1: float
    delta2: float
    phi: float
    lambda_n: float
    lambda_aw: float
    sigma2_w: float
    h_aw2: Optional[float] = None

    def __post_init__(self):
        if self.delta1 < 0.0 or self.delta2 < self.delta1:
            raise ValueError("need 0 <= delta1 <= delta2")


@dataclass(frozen=True)
class CovertStats:
    """Empirical detection-error summary from the Monte Carlo oracle."""

    p_fa: float
    p_md: float
    dep: float
    madep: float


def detection_context(scenario, losses, cover_fraction=1.0, h_aw2=None) -> DetectionContext:
    """Build a DetectionContext from scenario data.

    cover_fraction is the share a0+a2 of the power budget transmitted when no
    private stream is sent.
    """
    pt = scenario.pt
    return DetectionContext(
        delta1=cover_fraction * pt / losses.l_aw,
        delta2=pt / losses.l_aw,
        phi=losses.phi,
        lambda_n=losses.lambda_n,
        lambda_aw=scenario.lambda_aw,
        sigma2_w=scenario.sigma2_w,
        h_aw2=h_aw2,
    )


def dep(ctx: DetectionContext, eta):
    """Detection-error probability (false alarm + missed detection) at threshold eta.

    Piecewise in eta with breakpoints at sigma2 + delta1*|h_aw|^2 and
    sigma2 + delta2*|h_aw|^2; continuous at both.  Accepts scalar or array eta.
    With lambda_n = 0 the cascade randomness vanishes and the degenerate step
    DEP (1 below the first breakpoint, 0 between, 1 above) is returned with a
    warning.
    """
    if ctx.h_aw2 is None:
        raise ValueError("dep needs a conditional context (h_aw2 set)")
    eta_arr = np.asarray(eta, dtype=float)
    b1 = ctx.sigma2_w + ctx.delta1 * ctx.h_aw2
    b2 = ctx.sigma2_w + ctx.delta2 * ctx.h_aw2
    if ctx.lambda_n == 0.0:
        warnings.warn("lambda_n = 0: cascade randomness vanished, DEP degenerates to a step",
                      RuntimeWarning, stacklevel=2)
        out = np.where(eta_arr < b1, 1.0, np.where(eta_arr <= b2, 0.0, 1.0))
        return float(out) if np.isscalar(eta) else out
    with np.errstate(divide="ignore", over="ignore"):
        if ctx.delta1 > 0.0:
            v1 = np.exp((b1 - eta_arr) * ctx.phi / (ctx.delta1 * ctx.lambda_n))
        else:
            v1 = np.where(eta_arr > b1, 0.0, 1.0)
        md = 1.0 - np.exp((b2 - eta_arr) * ctx.phi / (ctx.delta2 * ctx.lambda_n))
    out = np.where(eta_arr < b1, 1.0, np.minimum(v1, 1.0) + np.where(eta_arr > b2, md, 0.0))
    return float(out) if np.isscalar(eta) else out


def optimal_threshold(ctx: DetectionContext):
    """Warden's optimal threshold and the DEP it attains, conditioned on |h_aw|^2.

    The minimizer sits at the upper breakpoint when the direct-link gain is
    large, otherwise at the interior stationary point of the upper branch.
    The limiting splits (no covert power / all covert power) return DEP 1 and
    0 inside a guard band, where the printed exponents are indeterminate.
    """
    if ctx.h_aw2 is None:
        raise ValueError("optimal_threshold needs a conditional context (h_aw2 set)")
    h2 = ctx.h_aw2
    if ctx.lambda_n == 0.0:
        # degenerate: any threshold in the open middle band detects perfectly
        return ctx.sigma2_w + ctx.delta2 * h2, 0.0
    s = ctx.delta1 / ctx.delta2
    if 1.0 - s < _A1_GUARD:
        return ctx.sigma2_w + ctx.delta2 * h2, 1.0
    if s < _A1_GUARD:
        return ctx.sigma2_w + ctx.delta2 * h2, 0.0
    am = 1.0 - s
    log_inv = math.log(1.0 / s)
    h_branch = s * ctx.lambda_n * log_inv / (am * ctx.phi)
    if h2 >= h_branch:
        eta_star = ctx.sigma2_w + ctx.delta2 * h2
    else:
        eta_star = ctx.sigma2_w + ctx.delta1 * ctx.lambda_n * log_inv / (am * ctx.phi)
    dep_star = float(np.clip(dep(ctx, eta_star), 0.0, 1.0))
    return eta_star, dep_star


def madep_closed(s, a1, ctx: DetectionContext):
    """Closed-form minimum average DEP for cover share s = a0+a2 and covert share a1.

    Vectorized over s and a1.  The a1 -> 0 and a1 -> 1 limits are returned
    exactly (1 and 0); the removable singularity at lambda_aw*phi = lambda_n
    is evaluated by series expansion.
    """
    s = np.asarray(s, dtype=float)
    a1 = np.asarray(a1, dtype=float)
    s, a1 = np.broadcast_arrays(s, a1)
    out = np.empty(s.shape, dtype=float)
    flat_s = s.ravel()
    flat_a = a1.ravel()
    flat_out = out.ravel()
    for i in range(flat_s.size):
        flat_out[i] = _madep_scalar(float(flat_s[i]), float(flat_a[i]),
                                    ctx.phi, ctx.lambda_n, ctx.lambda_aw)
    if out.ndim == 0:
        return float(out)
    return out


def _madep_scalar(s, a, phi, lam_n, lam_aw):
    if a < _A1_GUARD:
        return 1.0
    if a > 1.0 - _A1_GUARD:
        return 0.0
    if s <= 0.0 or lam_n == 0.0:
        # no cover power or no cascade uncertainty: the warden detects perfectly
        return 0.0
    if s >= 1.0:
        s = 1.0
    q = s * lam_n / (a * phi * lam_aw)
    log_s = math.log(s)
    t1 = s * lam_n / (a * phi * lam_aw + s * lam_n) * _pow(s, 1.0 + q)
    t2 = 1.0 - _pow(s, q)
    u = lam_aw * phi - lam_n
    if abs(u) < _SINGULAR_GUARD * lam_aw * phi:
        # removable singularity: first-order series of the bracketed factor
        w = -s * u * log_s / (a * phi * lam_aw)
        t3 = lam_n * _pow(s, 1.0 / a) * log_s / (phi * lam_aw) * (1.0 + 0.5 * w)
    else:
        bracket = _pow(s, s * (lam_n - phi * lam_aw) / (a * phi * lam_aw)) - 1.0
        t3 = -a * lam_n * _pow(s, -1.0 + 1.0 / a) / u * bracket
    return float(min(1.0, max(0.0, t1 + t2 + t3)))


def _pow(s, e):
    # s**e with underflow-to-zero semantics for s in (0, 1] and large e
    if s == 1.0:
        return 1.0
    le = e * math.log(s)
    if le < -745.0:
        return 0.0
    return math.exp(le)


def madep(alloc: PowerAllocation, ctx: DetectionContext):
    """Minimum average DEP of the warden under the given power split.

    Depends on (a0, a2) only through their sum.  Equals 1 exactly when no
    covert power is allocated.
    """
    return float(madep_closed(alloc.a0 + alloc.a2, alloc.a1, ctx))


def madep_manifold(a1, ctx: DetectionContext):
    """MADEP on the full-power manifold a0+a1+a2 = 1, as a function of a1 alone."""
    a1 = np.asarray(a1, dtype=float)
    return madep_closed(1.0 - a1, a1, ctx)


def madep_inverse(target, ctx: DetectionContext, tol=1e-9):
    """Largest covert share a1 whose manifold MADEP still meets the target.

    The manifold MADEP decreases strictly from 1 (a1=0) to 0 (a1=1), so the
    bound is found by bisection.  Returns 1.0 for a vacuous target <= 0 and
    0.0 (flagged) when even an infinitesimal covert share breaks the target.
    """
    if target <= 0.0:
        return 1.0
    if target >= 1.0:
        return 0.0
    if float(madep_manifold(2.0 * _A1_GUARD, ctx)) < target:
        warnings.warn("covertness target unreachable for any positive covert share",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if float(madep_manifold(mid, ctx)) >= target:
            lo = mid
        else:
            hi = mid
    return lo


def mc_min_dep(ctx: DetectionContext, n_channel, n_noise, rng: np.random.Generator,
               n_eta=96, block=8192) -> CovertStats:
    """Monte Carlo estimate of the warden's minimum average DEP.

    For each sampled direct-link gain, minimizes the empirical DEP over a
    threshold grid, using exponential cascade-power samples drawn by
    randomized stratification (unbiased, and accurate enough that the grid
    minimum does not pick up selection bias at the quoted sample counts).
    """
    n_channel = int(n_channel)
    n_noise = int(n_noise)
    lam_n = ctx.lambda_n
    sigma2 = ctx.sigma2_w
    d1, d2, phi = ctx.delta1, ctx.delta2, ctx.phi

    h2 = rng.exponential(ctx.lambda_aw, n_channel)
    u = (np.arange(n_noise) + rng.random(n_noise)) / n_noise
    x = -lam_n * np.log1p(-u)  # stratified exponential sample, ascending

    s = min(max(d1 / d2, 1e-12), 1.0 - 1e-12)
    span = (d2 * lam_n / phi) * (4.0 + 4.0 * math.log(1.0 / s) / (1.0 - s))
    if span <= 0.0:
        span = d2 * max(ctx.lambda_aw, 1.0) / phi
    # threshold offsets above the upper breakpoint; offset 0 also covers the
    # middle band, whose empirical DEP is minimized at the breakpoint itself
    offsets = np.concatenate([[0.0], np.geomspace(span * 1e-4, span, n_eta - 1)])

    # thresholds are parameterized as eta = sigma2 + d2*h + offset, so the
    # ECDF arguments are cancellation-free:
    #   missed detection: offset*phi/d2 (independent of h)
    #   false alarm: ((d2-d1)*h + offset)*phi/d1
    p_md_row = np.searchsorted(x, offsets * phi / d2, side="left") / n_noise
    sum_min = 0.0
    sum_fa = 0.0
    sum_md = 0.0
    for start in range(0, n_channel, block):
        hb = h2[start:start + block, None]
        if d1 > 0.0:
            arg_fa = ((d2 - d1) * hb + offsets[None, :]) * phi / d1
            p_fa = 1.0 - np.searchsorted(x, arg_fa, side="right") / n_noise
        else:
            p_fa = np.zeros((hb.shape[0], offsets.size))
        total = p_fa + p_md_row[None, :]
        j = np.argmin(total, axis=1)
        rows = np.arange(total.shape[0])
        sum_min += float(np.sum(total[rows, j]))
        sum_fa += float(np.sum(p_fa[rows, j]))
        sum_md += float(np.sum(p_md_row[j]))
    return CovertStats(
        p_fa=sum_fa / n_channel,
        p_md=sum_md / n_channel,
        dep=(sum_fa + sum_md) / n_channel,
        madep=sum_min / n_channel,
    )

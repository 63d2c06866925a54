"""Achievable-rate formulas for the RSMA downlink and the NOMA benchmark.

Rates are continuous (log2-based, bps/Hz); no flooring or quantization.  The
imperfect-SIC coefficient omega adds residual common-stream power to the
private-stream interference and reduces to the perfect-SIC forms at omega=0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_TOL = 1e-9


@dataclass(frozen=True)
class PowerAllocation:
    """Fractions of the transmit power: common stream, Bob's private, Grace's private."""

    a0: float
    a1: float
    a2: float

    def __post_init__(self):
        for name in ("a0", "a1", "a2"):
            v = getattr(self, name)
            if not -_TOL <= v <= 1.0 + _TOL:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.a0 + self.a1 + self.a2 > 1.0 + _TOL:
            raise ValueError(f"power fractions sum to {self.a0 + self.a1 + self.a2} > 1")

    @property
    def total(self):
        return self.a0 + self.a1 + self.a2


@dataclass(frozen=True)
class RateAllocation:
    """Common-rate shares for Bob (b1) and Grace (b2)."""

    b1: float
    b2: float

    def __post_init__(self):
        for name in ("b1", "b2"):
            v = getattr(self, name)
            if not -_TOL <= v <= 1.0 + _TOL:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.b1 + self.b2 > 1.0 + _TOL:
            raise ValueError(f"rate shares sum to {self.b1 + self.b2} > 1")


@dataclass(frozen=True)
class NomaAllocation:
    """NOMA power fractions for Bob's signal (a1_bar) and Grace's (a2_bar).

    The decode order at Bob wants a1_bar <= a2_bar; that cap is enforced by
    the power optimizer (the rate formulas stay valid for any split, e.g. the
    single-user corner a1_bar = 1).
    """

    a1_bar: float
    a2_bar: float

    def __post_init__(self):
        for name in ("a1_bar", "a2_bar"):
            v = getattr(self, name)
            if not -_TOL <= v <= 1.0 + _TOL:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.a1_bar + self.a2_bar > 1.0 + _TOL:
            raise ValueError("NOMA power fractions sum above 1")


@dataclass(frozen=True)
class RateReport:
    """All per-stream and per-user rates for one RSMA operating point (bps/Hz)."""

    r_b_s0: float
    r_g_s0: float
    r_c: float
    r_b_c: float
    r_g_c: float
    r_b_s1: float
    r_g_s2: float
    r_b: float
    r_g: float


def _sinr_rate(signal, interference, noise):
    if noise <= 0.0:
        raise ValueError("noise power must be positive")
    return math.log2(1.0 + signal / (interference + noise))


def _check_gains(z_ab2, z_ag2, pt):
    if z_ab2 < 0.0 or z_ag2 < 0.0:
        raise ValueError("channel gains must be nonnegative")
    if pt <= 0.0:
        raise ValueError("transmit power must be positive")


def rsma_rates(z_ab2, z_ag2, pt, sigma2_b, sigma2_g, alloc: PowerAllocation,
               beta: RateAllocation, omega=0.0) -> RateReport:
    """Rate report for one RSMA operating point.

    Common-stream rates treat both private streams as noise; private rates see
    the other private stream plus omega * a0 residual common power.  Bob's
    total is his common share plus his private rate.
    """
    _check_gains(z_ab2, z_ag2, pt)
    a0, a1, a2 = alloc.a0, alloc.a1, alloc.a2
    r_b_s0 = _sinr_rate(a0 * pt * z_ab2, (a1 + a2) * pt * z_ab2, sigma2_b)
    r_g_s0 = _sinr_rate(a0 * pt * z_ag2, (a1 + a2) * pt * z_ag2, sigma2_g)
    r_b_s1 = _sinr_rate(a1 * pt * z_ab2, (omega * a0 + a2) * pt * z_ab2, sigma2_b)
    r_g_s2 = _sinr_rate(a2 * pt * z_ag2, (omega * a0 + a1) * pt * z_ag2, sigma2_g)
    r_c = min(r_b_s0, r_g_s0)
    r_b_c = beta.b1 * r_c
    r_g_c = beta.b2 * r_c
    return RateReport(
        r_b_s0=r_b_s0,
        r_g_s0=r_g_s0,
        r_c=r_c,
        r_b_c=r_b_c,
        r_g_c=r_g_c,
        r_b_s1=r_b_s1,
        r_g_s2=r_g_s2,
        r_b=r_b_c + r_b_s1,
        r_g=r_g_c + r_g_s2,
    )


def noma_rates(z_ab2, z_ag2, pt, sigma2_b, sigma2_g, alloc: NomaAllocation, omega=0.0):
    """NOMA rates (r_b_sg, r_b_sb, r_g_sg).

    Bob first decodes Grace's signal (r_b_sg), cancels it up to the residual
    omega, then decodes his own (r_b_sb).  Grace decodes her signal treating
    Bob's as noise (r_g_sg).
    """
    _check_gains(z_ab2, z_ag2, pt)
    a1, a2 = alloc.a1_bar, alloc.a2_bar
    r_b_sg = _sinr_rate(a2 * pt * z_ab2, a1 * pt * z_ab2, sigma2_b)
    r_b_sb = _sinr_rate(a1 * pt * z_ab2, omega * a2 * pt * z_ab2, sigma2_b)
    r_g_sg = _sinr_rate(a2 * pt * z_ag2, a1 * pt * z_ag2, sigma2_g)
    return r_b_sg, r_b_sb, r_g_sg

"""Small-scale fading draws, composite channel gains, and lifted matrices.

Channels are circularly-symmetric complex Gaussians drawn from an explicitly
seeded generator, so sweeps replay exactly.  Everything downstream of the draw
is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario, PathLossSet


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of every small-scale fading coefficient.

    h_ar1/h_rb/h_rw belong to the reflection group (length k_n); h_ar2/h_rg to
    the transmission group (length k_m).  h_ab and h_aw are the direct links.
    """

    h_ab: complex
    h_aw: complex
    h_ar1: np.ndarray
    h_rb: np.ndarray
    h_rw: np.ndarray
    h_ar2: np.ndarray
    h_rg: np.ndarray

    def __post_init__(self):
        if self.h_ar1.shape != self.h_rb.shape or self.h_ar1.shape != self.h_rw.shape:
            raise ValueError("reflection-group vectors must share one length")
        if self.h_ar2.shape != self.h_rg.shape:
            raise ValueError("transmission-group vectors must share one length")


@dataclass(frozen=True)
class CompositeGains:
    """Squared composite channel gains for Bob and Grace, plus Bob's direct part."""

    z_ab2: float
    z_ag2: float
    nu_b2: float


@dataclass(frozen=True)
class LiftedMatrices:
    """Hermitian data matrices for the lifted phase-shift formulation.

    For any unit-modulus phase vectors, Tr(h_b @ U_r) + |nu_b|^2 equals Bob's
    composite gain and Tr(h_g @ U_t) equals Grace's, where U_r, U_t are the
    rank-one lifts of the phase vectors.
    """

    h_b: np.ndarray
    h_g: np.ndarray
    nu_b: complex
    lam_b: np.ndarray
    lam_g: np.ndarray

    @property
    def nu_b2(self):
        return abs(self.nu_b) ** 2

    @property
    def k_n(self):
        return self.lam_b.shape[0]

    @property
    def k_m(self):
        return self.lam_g.shape[0]


def _cn(rng, variance, size=None):
    # circularly-symmetric complex Gaussian with the given per-entry variance
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal(size)
    im = rng.standard_normal(size)
    return scale * (re + 1j * im)


def sample_channels(scenario: Scenario, rng: np.random.Generator) -> ChannelRealization:
    """Draw one iid realization of all links; deterministic given the generator state."""
    sc = scenario
    return ChannelRealization(
        h_ab=complex(_cn(rng, sc.lambda_ab)),
        h_aw=complex(_cn(rng, sc.lambda_aw)),
        h_ar1=_cn(rng, sc.lambda_ar, sc.k_n),
        h_rb=_cn(rng, sc.lambda_rb, sc.k_n),
        h_rw=_cn(rng, sc.lambda_rw, sc.k_n),
        h_ar2=_cn(rng, sc.lambda_ar, sc.k_m),
        h_rg=_cn(rng, sc.lambda_rg, sc.k_m),
    )


def composite_gains(realization: ChannelRealization, theta_r, theta_t,
                    losses: PathLossSet) -> CompositeGains:
    """Composite gains |Z_ab|^2, |Z_ag|^2 for given reflection/transmission phases.

    Phases are interpreted mod 2*pi.  The reflection path at element k
    contributes conj(h_ar1[k]) * exp(j*theta_r[k]) * h_rb[k].
    """
    r = realization
    theta_r = np.asarray(theta_r, dtype=float)
    theta_t = np.asarray(theta_t, dtype=float)
    if theta_r.shape != r.h_ar1.shape:
        raise ValueError(f"theta_r has length {theta_r.size}, expected {r.h_ar1.size}")
    if theta_t.shape != r.h_ar2.shape:
        raise ValueError(f"theta_t has length {theta_t.size}, expected {r.h_ar2.size}")
    nu_b = r.h_ab / np.sqrt(losses.l_ab)
    reflect = np.sum(np.conj(r.h_ar1) * np.exp(1j * theta_r) * r.h_rb)
    reflect /= np.sqrt(losses.l_ar * losses.l_rb)
    transmit = np.sum(np.conj(r.h_ar2) * np.exp(1j * theta_t) * r.h_rg)
    transmit /= np.sqrt(losses.l_ar * losses.l_rg)
    return CompositeGains(
        z_ab2=float(abs(nu_b + reflect) ** 2),
        z_ag2=float(abs(transmit) ** 2),
        nu_b2=float(abs(nu_b) ** 2),
    )


def build_lifted(realization: ChannelRealization, losses: PathLossSet) -> LiftedMatrices:
    """Assemble the Hermitian matrices behind the trace-form gain identities."""
    r = realization
    lam_b = np.conj(r.h_ar1) * r.h_rb / np.sqrt(losses.l_ar * losses.l_rb)
    lam_g = np.conj(r.h_ar2) * r.h_rg / np.sqrt(losses.l_ar * losses.l_rg)
    nu_b = complex(r.h_ab / np.sqrt(losses.l_ab))
    k_n = lam_b.shape[0]
    h_b = np.zeros((k_n + 1, k_n + 1), dtype=complex)
    h_b[:k_n, :k_n] = np.outer(lam_b, np.conj(lam_b))
    # cross term carries conj(nu_b) so that h_b stays Hermitian and the trace
    # identity reproduces |Z_ab|^2 exactly
    h_b[:k_n, k_n] = lam_b * np.conj(nu_b)
    h_b[k_n, :k_n] = np.conj(h_b[:k_n, k_n])
    h_g = np.outer(lam_g, np.conj(lam_g))
    return LiftedMatrices(h_b=h_b, h_g=h_g, nu_b=nu_b, lam_b=lam_b, lam_g=lam_g)


def lift_phases_r(theta_r):
    """Rank-one lift of reflection phases: U_r from [exp(-j*theta); 1]."""
    u = np.append(np.exp(-1j * np.asarray(theta_r, dtype=float)), 1.0)
    return np.outer(u, np.conj(u))


def lift_phases_t(theta_t):
    """Rank-one lift of transmission phases."""
    u = np.exp(-1j * np.asarray(theta_t, dtype=float))
    return np.outer(u, np.conj(u))


def cophased_theta_r(lifted: LiftedMatrices):
    """Phases aligning every reflection term with Bob's direct link (analytic optimum)."""
    return np.mod(np.angle(lifted.nu_b) - np.angle(lifted.lam_b), 2.0 * np.pi)


def cophased_theta_t(lifted: LiftedMatrices):
    """Phases aligning Grace's transmission terms (optimum up to a common rotation)."""
    return np.mod(-np.angle(lifted.lam_g), 2.0 * np.pi)


def max_gain_bob(lifted: LiftedMatrices):
    """Co-phased upper bound on |Z_ab|^2; attained by cophased_theta_r."""
    return float((abs(lifted.nu_b) + np.sum(np.abs(lifted.lam_b))) ** 2)


def max_gain_grace(lifted: LiftedMatrices):
    """Co-phased upper bound on |Z_ag|^2; attained by cophased_theta_t."""
    return float(np.sum(np.abs(lifted.lam_g)) ** 2)


def save_realization(path, realization: ChannelRealization):
    """Dump a realization to a binary file for replay across schemes."""
    np.savez(
        path,
        h_ab=realization.h_ab,
        h_aw=realization.h_aw,
        h_ar1=realization.h_ar1,
        h_rb=realization.h_rb,
        h_rw=realization.h_rw,
        h_ar2=realization.h_ar2,
        h_rg=realization.h_rg,
    )


def load_realization(path) -> ChannelRealization:
    data = np.load(path)
    return ChannelRealization(
        h_ab=complex(data["h_ab"]),
        h_aw=complex(data["h_aw"]),
        h_ar1=data["h_ar1"],
        h_rb=data["h_rb"],
        h_rw=data["h_rw"],
        h_ar2=data["h_ar2"],
        h_rg=data["h_rg"],
    )

"""Penalty-based successive convex approximation over lifted phase matrices.

The rank-one constraint on each lifted matrix is replaced by the penalty
trace(U) - lambda_max(U) (nuclear minus spectral norm of a PSD matrix), whose
concave -lambda_max part is majorized by its tangent at the previous iterate.
Each step is then a semidefinite program; the penalty weight grows (rho
shrinks geometrically) until the residual drops below zeta2, after which unit
modulus phases are read off the leading eigenvectors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import LiftedMatrices, lift_phases_r, lift_phases_t, max_gain_bob, max_gain_grace
from .errors import Infeasible
from .sdp import SdpProblem, solve

_TIE_TOL = 1e-10


@dataclass
class BeamformingState:
    """Lifted iterates plus the penalty bookkeeping of one PSCA run.

    u_r is Hermitian PSD of size k_n+1 (unit diagonal, last coordinate is the
    appended reference 1), u_t of size k_m.  penalty_value is the summed
    rank-one residual; history keeps one record per relaxation solve.
    """

    u_r: np.ndarray
    u_t: np.ndarray
    rho: float
    penalty_value: float
    lifted: LiftedMatrices
    zeta2: float
    gain_objective: float = 0.0
    history: list = field(default_factory=list)


def leading_eigvec(u):
    """Largest eigenvalue and a deterministic eigenvector for it.

    Under (near-)multiplicity the eigenvector at the smallest tied index is
    chosen and the tie is flagged with a warning.
    """
    lam, vec = np.linalg.eigh(u)
    lam_max = float(lam[-1])
    tied = np.nonzero(lam >= lam_max - _TIE_TOL * max(1.0, abs(lam_max)))[0]
    if tied.size > 1:
        warnings.warn(f"leading eigenvalue tied across {tied.size} directions",
                      RuntimeWarning, stacklevel=2)
    return lam_max, vec[:, int(tied[0])], tied.size > 1


def penalty_of(u):
    """Rank-one residual trace(U) - lambda_max(U); zero iff rank(U) <= 1 for PSD U."""
    lam = np.linalg.eigvalsh(u)
    return float(np.real(np.trace(u)) - lam[-1])


def surrogate_spectral(u, u_ref):
    """Affine upper bound on -lambda_max(u), tangent at u_ref.

    Equals -lambda_max(u_ref) at u = u_ref and never falls below -lambda_max(u).
    """
    lam_ref, v, _ = leading_eigvec(u_ref)
    return float(-lam_ref - np.real(np.vdot(np.outer(v, v.conj()), u - u_ref)))


def rsma_gain_floor(alloc, beta2, pt, sigma2_g, rg_min, omega=0.0, g_max=None, lifted=None):
    """Minimum |Z_ag|^2 meeting Grace's rate target at the given allocation.

    The rate is monotone increasing in the gain, so the floor is the bisection
    root of beta2*common_rate(g) + private_rate(g) = rg_min on [0, g_max].
    """
    if rg_min <= 0.0:
        return 0.0
    if g_max is None:
        if lifted is None:
            raise ValueError("need g_max or lifted to bound the bisection")
        g_max = max_gain_grace(lifted)
    a0, a1, a2 = alloc.a0, alloc.a1, alloc.a2

    def grace_rate(g):
        r_s0 = math.log2(1.0 + a0 * pt * g / ((a1 + a2) * pt * g + sigma2_g))
        r_s2 = math.log2(1.0 + a2 * pt * g / ((omega * a0 + a1) * pt * g + sigma2_g))
        return beta2 * r_s0 + r_s2

    if grace_rate(g_max) < rg_min - 1e-9 * max(1.0, rg_min):
        raise Infeasible("grace_qos", f"target {rg_min} unreachable below gain {g_max:.3e}")
    if grace_rate(g_max) < rg_min:
        return g_max  # target met exactly at the bracket edge (rounding)
    lo, hi = 0.0, g_max
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if grace_rate(mid) >= rg_min:
            hi = mid
        else:
            lo = mid
    return hi


def noma_gain_floor(alloc, pt, sigma2_g, rg_min):
    """Closed-form minimum |Z_ag|^2 for Grace's NOMA rate target."""
    gamma = 2.0 ** rg_min - 1.0
    if gamma == 0.0:
        return 0.0
    denom = (alloc.a2_bar - gamma * alloc.a1_bar) * pt
    if denom <= 0.0:
        raise Infeasible("noma_qos", "a2_bar - gamma*a1_bar must be positive")
    return gamma * sigma2_g / denom


def _block(h_top, h_bot, n_r, n_t):
    out = np.zeros((n_r + n_t, n_r + n_t), dtype=complex)
    if h_top is not None:
        out[:n_r, :n_r] = h_top
    if h_bot is not None:
        out[n_r:, n_r:] = h_bot
    return out


def _run_psca(lifted, gain_floor, grace_in_objective, state0, rho0, c1, zeta2,
              rng, max_shrink, sca_per_rho, sca_tol):
    n_r = lifted.k_n + 1
    n_t = lifted.k_m
    scale = max(float(np.abs(lifted.h_b).max()), float(np.abs(lifted.h_g).max()), 1e-300)
    hb = lifted.h_b / scale
    hg = lifted.h_g / scale
    nu2 = lifted.nu_b2 / scale
    floor_n = gain_floor / scale

    max_g = max_gain_grace(lifted)
    max_b = max_gain_bob(lifted)  # includes |nu_b|^2, i.e. best |Z_ab|^2
    # floor comparisons carry rank-one extraction noise at the zeta2 scale
    if gain_floor > max_g * (1.0 + 1e-4):
        raise Infeasible("grace_qos", f"floor {gain_floor:.3e} above best gain {max_g:.3e}")
    if gain_floor > max_b * (1.0 + 1e-4):
        # the ordering constraint caps Grace's gain by Bob's best composite
        raise Infeasible("gain_ordering", "floor exceeds Bob's best composite gain")
    gain_floor = min(gain_floor, max_g, max_b)

    # a floor at Grace's co-phased maximum leaves the relaxation no interior:
    # the transmission matrix is then pinned to its unique optimum analytically
    pinned_u_t = None
    if gain_floor >= max_g * (1.0 - 1e-8):
        from .channel import cophased_theta_t
        pinned_u_t = lift_phases_t(cophased_theta_t(lifted))
    dim = n_r + n_t if pinned_u_t is None else n_r

    eqs = []
    for k in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[k, k] = 1.0
        eqs.append((e, 1.0))
    if pinned_u_t is None:
        order_mat = _block(hb, -hg, n_r, n_t)
        floor_mat = _block(None, hg, n_r, n_t)
        ineqs = [(order_mat, -nu2), (floor_mat, floor_n)]
    else:
        grace_n = float(np.real(np.vdot(hg, pinned_u_t)))
        ineqs = [(hb, grace_n - nu2)]

    if state0 is not None:
        u_r, u_t = state0.u_r.copy(), state0.u_t.copy()
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        u_r = lift_phases_r(rng.uniform(0.0, 2.0 * np.pi, lifted.k_n))
        u_t = lift_phases_t(rng.uniform(0.0, 2.0 * np.pi, lifted.k_m))
    if pinned_u_t is not None:
        u_t = pinned_u_t

    def solve_step(weight, vr, vt):
        c_top = hb.copy()
        # the penalty-free presolve only supplies an interior start; giving it
        # the Grace gains keeps that solve well-posed even for the NOMA form
        c_bot = hg.copy() if (grace_in_objective or weight == 0.0) else np.zeros_like(hg)
        if weight > 0.0:
            c_top += weight * np.outer(vr, vr.conj())
            if vt is not None:
                c_bot += weight * np.outer(vt, vt.conj())
        if pinned_u_t is None:
            prob = SdpProblem(dim, _block(c_top, c_bot, n_r, n_t), eqs, ineqs)
            x0 = _block(u_r, u_t, n_r, n_t)
        else:
            prob = SdpProblem(dim, c_top, eqs, ineqs)
            x0 = u_r
        sol = solve(prob, tol=1e-7, max_iter=150, x0=x0)
        if sol.status == "infeasible":
            raise Infeasible("beamforming_sdp", "relaxation reported infeasible")
        if sol.status != "optimal":
            kkt = sol.kkt_residuals
            if max(kkt.get("primal", math.inf), kkt.get("gap", math.inf)) > 1e-4:
                raise Infeasible("beamforming_sdp",
                                 f"relaxation solve stalled (residuals {kkt})")
        return sol

    def unpack(sol):
        if pinned_u_t is None:
            return sol.x[:n_r, :n_r], sol.x[n_r:, n_r:]
        return sol.x, pinned_u_t

    history = []
    # penalty-free presolve for a feasible high-rank starting point
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        u_r, u_t = unpack(solve_step(0.0, None, None))

    rho = rho0
    pen = penalty_of(u_r) + penalty_of(u_t)
    stop = False
    for shrink in range(max_shrink):
        weight = 1.0 / rho
        f_prev = None
        for inner in range(max(1, sca_per_rho)):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                _, vr, _ = leading_eigvec(u_r)
                vt = None if pinned_u_t is not None else leading_eigvec(u_t)[1]
                sol = solve_step(weight, vr, vt)
            u_r, u_t = unpack(sol)
            pen = penalty_of(u_r) + penalty_of(u_t)
            gains_n = float(np.real(np.vdot(hb, u_r) + np.vdot(hg, u_t)))
            f_val = (gains_n if grace_in_objective
                     else float(np.real(np.vdot(hb, u_r)))) - weight * pen
            history.append({
                "rho": rho,
                "objective": gains_n * scale,
                "penalized": f_val * scale,
                "penalty_value": pen,
                "sdp_status": sol.status,
            })
            if pen <= zeta2:
                stop = True
                break
            if f_prev is not None and f_val - f_prev <= sca_tol * (1.0 + abs(f_val)):
                break
            f_prev = f_val
        if stop:
            break
        rho *= c1
    else:
        warnings.warn(f"penalty loop hit the shrink cap with residual {pen:.3e}",
                      RuntimeWarning, stacklevel=3)

    gain_obj = float(np.real(np.vdot(lifted.h_b, u_r) + np.vdot(lifted.h_g, u_t)))
    return BeamformingState(u_r=u_r, u_t=u_t, rho=rho, penalty_value=pen,
                            lifted=lifted, zeta2=zeta2, gain_objective=gain_obj,
                            history=history)


def psca_rsma(lifted: LiftedMatrices, qos_gain_floor, state0=None, rho0=10.0,
              c1=0.5, zeta2=1e-4, rng=None, max_shrink=60, sca_per_rho=1,
              sca_tol=1e-6) -> BeamformingState:
    """Maximize both composite gains under Grace's gain floor and the gain ordering.

    Solves the penalized relaxation repeatedly, refreshing the spectral
    surrogate and shrinking rho by c1, until the rank-one residual is at most
    zeta2.
    """
    return _run_psca(lifted, qos_gain_floor, True, state0, rho0, c1, zeta2,
                     rng, max_shrink, sca_per_rho, sca_tol)


def psca_noma(lifted: LiftedMatrices, noma_gain_floor, state0=None, rho0=10.0,
              c1=0.5, zeta2=1e-4, rng=None, max_shrink=60, sca_per_rho=1,
              sca_tol=1e-6) -> BeamformingState:
    """NOMA variant: maximize Bob's composite gain only; Grace enters via the floor."""
    return _run_psca(lifted, noma_gain_floor, False, state0, rho0, c1, zeta2,
                     rng, max_shrink, sca_per_rho, sca_tol)


def extract_phases(state: BeamformingState):
    """Unit-modulus phases from the leading eigenvectors of the lifted iterates.

    Requires the rank-one residual to be at (or below) the state's zeta2.
    Returns (theta_r, theta_t, gain_loss) where gain_loss is the relative drop
    of the gain objective after projecting onto exact phase vectors.
    """
    if state.penalty_value > max(state.zeta2, 1e-12) * (1.0 + 1e-6):
        raise ValueError(f"rank-one residual {state.penalty_value:.3e} above "
                         f"tolerance {state.zeta2:.3e}; cannot extract phases")
    k_n = state.lifted.k_n
    _, v_r, _ = leading_eigvec(state.u_r)
    ref = v_r[-1]
    if abs(ref) < 1e-12:
        raise ValueError("reference coordinate of the reflection eigenvector vanished")
    v_r = v_r * np.exp(-1j * np.angle(ref))
    theta_r = np.mod(-np.angle(v_r[:k_n]), 2.0 * np.pi)
    _, v_t, _ = leading_eigvec(state.u_t)
    v_t = v_t * np.exp(-1j * np.angle(v_t[0]))
    theta_t = np.mod(-np.angle(v_t), 2.0 * np.pi)

    lifted = state.lifted
    u_r1 = lift_phases_r(theta_r)
    u_t1 = lift_phases_t(theta_t)
    projected = float(np.real(np.vdot(lifted.h_b, u_r1) + np.vdot(lifted.h_g, u_t1)))
    matrixv = float(np.real(np.vdot(lifted.h_b, state.u_r) + np.vdot(lifted.h_g, state.u_t)))
    gain_loss = (matrixv - projected) / max(abs(matrixv), 1e-300)
    return theta_r, theta_t, gain_loss

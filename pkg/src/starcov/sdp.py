"""Self-contained solver for small dense complex-Hermitian SDPs.

Problems have a trace-linear objective (maximize Re Tr(C X)), trace equalities,
trace inequalities, and a single Hermitian PSD variable.  The solver is a
primal-dual interior-point method with Nesterov-Todd scaling and a Mehrotra
centering heuristic; inequalities are handled through nonnegative slacks.
Unit-diagonal pin constraints (the dominant kind here) are recognized and get
an O(n^2) Schur-complement contribution, so per-iteration cost stays at a few
dense n^3 operations.

An ADMM fallback (dual alternating-direction method) is attempted when the
interior-point loop fails to reach the requested tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_STEP_FRAC = 0.98


@dataclass
class SdpProblem:
    """maximize Re Tr(objective @ X) over Hermitian PSD X of size dim.

    eq_constraints: list of (A, b) with Re Tr(A X) = b.
    ineq_constraints: list of (B, c) with Re Tr(B X) >= c.
    All data matrices must be Hermitian of size dim.
    """

    dim: int
    objective: np.ndarray
    eq_constraints: list = field(default_factory=list)
    ineq_constraints: list = field(default_factory=list)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        self.objective = _check_hermitian(self.objective, self.dim, "objective")
        self.eq_constraints = [(_check_hermitian(a, self.dim, "eq constraint"), float(b))
                               for a, b in self.eq_constraints]
        self.ineq_constraints = [(_check_hermitian(a, self.dim, "ineq constraint"), float(c))
                                 for a, c in self.ineq_constraints]


@dataclass
class SdpSolution:
    """Solver output: PSD iterate, achieved objective, status, and KKT residuals.

    status is one of 'optimal', 'infeasible', 'max_iter'.  kkt_residuals holds
    relative primal/dual feasibility and the absolute duality gap.
    """

    x: np.ndarray
    objective_value: float
    status: str
    kkt_residuals: dict


def _check_hermitian(a, dim, what):
    a = np.asarray(a, dtype=complex)
    if a.shape != (dim, dim):
        raise ValueError(f"{what} has shape {a.shape}, expected {(dim, dim)}")
    if not np.allclose(a, a.conj().T, atol=1e-10 * (1.0 + np.abs(a).max())):
        raise ValueError(f"{what} is not Hermitian")
    return 0.5 * (a + a.conj().T)


def _inner(a, b):
    # Re Tr(A B) for Hermitian A, B
    return float(np.real(np.vdot(a, b)))


def _herm(a):
    return 0.5 * (a + a.conj().T)


def _pin_of(a):
    """Return (k, scale) if a == scale * e_k e_k^H, else None."""
    idx = np.nonzero(np.abs(a) > 0.0)
    if len(idx[0]) != 1:
        return None
    i, j = int(idx[0][0]), int(idx[1][0])
    if i != j:
        return None
    v = a[i, i]
    if abs(v.imag) > 1e-14 * abs(v):
        return None
    return i, float(v.real)


class _Data:
    """Preprocessed constraint data for the interior-point loop."""

    def __init__(self, problem: SdpProblem):
        self.n = problem.dim
        mats = [a for a, _ in problem.eq_constraints] + [a for a, _ in problem.ineq_constraints]
        rhs = [b for _, b in problem.eq_constraints] + [c for _, c in problem.ineq_constraints]
        self.m = len(mats)
        self.n_eq = len(problem.eq_constraints)
        self.n_in = len(problem.ineq_constraints)
        self.b = np.asarray(rhs, dtype=float)
        self.pins = []      # (row index, matrix index k, scale)
        self.gen_rows = []  # row indices of general constraints
        self.gen_mats = []
        for row, a in enumerate(mats):
            pin = _pin_of(a)
            if pin is not None:
                self.pins.append((row, pin[0], pin[1]))
            else:
                self.gen_rows.append(row)
                self.gen_mats.append(a)
        self.mats = mats
        # slack j belongs to constraint row n_eq + j
        self.slack_rows = np.arange(self.n_eq, self.m)

    def apply(self, x):
        """A(X): all constraint inner products."""
        out = np.empty(self.m)
        for row, k, scale in self.pins:
            out[row] = scale * x[k, k].real
        for row, a in zip(self.gen_rows, self.gen_mats):
            out[row] = _inner(a, x)
        return out

    def adjoint(self, y):
        """A^T(y) as a Hermitian matrix."""
        out = np.zeros((self.n, self.n), dtype=complex)
        for row, k, scale in self.pins:
            out[k, k] += scale * y[row]
        for row, a in zip(self.gen_rows, self.gen_mats):
            out += y[row] * a
        return out


def _nt_scaling(x, z):
    """NT scaling point W with W Z W = X, via Cholesky of X and eig of L^H Z L."""
    l = np.linalg.cholesky(x)
    t = _herm(l.conj().T @ z @ l)
    lam, u = np.linalg.eigh(t)
    lam = np.maximum(lam, 1e-300)
    g = l @ u
    return _herm((g * lam ** -0.5) @ g.conj().T)


def _max_step_psd(x, dx):
    """Largest alpha with x + alpha*dx PSD (inf if dx keeps the cone)."""
    l = np.linalg.cholesky(x)
    s = np.linalg.solve(l, np.linalg.solve(l, dx).conj().T).conj().T
    lam_min = float(np.linalg.eigvalsh(_herm(s))[0])
    if lam_min >= -1e-14:
        return math.inf
    return -1.0 / lam_min


def _max_step_vec(v, dv):
    neg = dv < 0.0
    if not np.any(neg):
        return math.inf
    return float(np.min(-v[neg] / dv[neg]))


def _is_pd(a):
    try:
        np.linalg.cholesky(a)
        return True
    except np.linalg.LinAlgError:
        return False


def _pd_step(mat, dmat, alpha):
    """Shrink alpha until mat + alpha*dmat is numerically PD (cholesky-verified)."""
    for _ in range(40):
        cand = _herm(mat + alpha * dmat)
        if _is_pd(cand):
            return cand, alpha
        alpha *= 0.5
    return mat.copy(), 0.0


def solve(problem: SdpProblem, tol=1e-7, max_iter=200, x0=None) -> SdpSolution:
    """Solve the SDP; at status 'optimal' the iterate is primal feasible to tol
    and the objective sits within tol*(1+|obj|) of the dual bound.

    x0, when given, seeds the interior iterate (blended toward the identity so
    the start stays well inside the cone).  The ADMM fallback only engages
    when the interior-point loop ends far from optimality.
    """
    res = _solve_ipm(problem, tol, max_iter, x0)
    if res.status != "max_iter":
        return res
    worst = max(res.kkt_residuals.get("primal", math.inf),
                res.kkt_residuals.get("dual", math.inf),
                res.kkt_residuals.get("gap", math.inf))
    if worst <= 100.0 * tol:
        return res  # near-optimal; not worth the slow fallback
    admm = _solve_admm(problem, tol=max(tol, 1e-7), max_iter=4000)
    if admm is not None and admm.status == "optimal":
        return admm
    return res


def _solve_ipm(problem, tol, max_iter, x0):
    data = _Data(problem)
    n, m, p = data.n, data.m, data.n_in
    if m == 0:
        raise ValueError("solver requires at least one constraint")
    c_raw = -problem.objective  # internal minimization
    c_scale = max(1.0, float(np.linalg.norm(c_raw)))
    c = c_raw / c_scale
    b = data.b
    b_norm = 1.0 + float(np.linalg.norm(b))
    c_norm = 1.0 + float(np.linalg.norm(c))

    # infeasible start, strictly interior; warm starts are blended heavily
    # toward the identity, since near-singular seeds destabilize the scaling
    if x0 is not None:
        x = _herm(np.asarray(x0, dtype=complex))
        lam_min = float(np.linalg.eigvalsh(x)[0])
        mean_eig = max(float(np.trace(x).real) / n, 1e-3)
        x = 0.5 * (x + max(-lam_min, 0.0) * np.eye(n)) + 0.5 * mean_eig * np.eye(n)
    else:
        x = np.eye(n, dtype=complex)
    z = np.eye(n, dtype=complex)
    y = np.zeros(m)
    t = np.ones(p)
    s = np.ones(p)

    status = "max_iter"
    kkt = {}
    best = None
    restarted = x0 is None
    it = 0
    while it < max_iter:
        it += 1
        ax = data.apply(x)
        rp = b - ax
        if p:
            rp[data.slack_rows] += t
        rd_mat = c - z - data.adjoint(y)
        rd_t = y[data.slack_rows] - s if p else np.zeros(0)

        mu = (_inner(x, z) + (float(t @ s) if p else 0.0)) / (n + p)
        if not math.isfinite(mu) or mu > 1e8:
            if restarted:
                break  # diverged; fall back to the best iterate seen
            # diverging warm start: restart cold
            restarted = True
            x = np.eye(n, dtype=complex)
            z = np.eye(n, dtype=complex)
            y = np.zeros(m)
            t = np.ones(p)
            s = np.ones(p)
            best = None
            continue
        pobj = _inner(c, x)
        dobj = float(b @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        prim_res = float(np.linalg.norm(rp)) / b_norm
        dual_res = math.hypot(float(np.linalg.norm(rd_mat)), float(np.linalg.norm(rd_t))) / c_norm
        kkt = {"primal": prim_res, "dual": dual_res, "gap": gap, "mu": mu}
        if best is None or max(prim_res, dual_res, gap) < best[0]:
            best = (max(prim_res, dual_res, gap), x.copy(), y.copy(), kkt.copy())
        if prim_res <= tol and dual_res <= tol and (gap <= tol or mu <= tol * 1e-2):
            status = "optimal"
            break
        if _infeasibility_certificate(data, y, tol):
            status = "infeasible"
            break

        w = _nt_scaling(x, z)
        w2 = t / s if p else np.zeros(0)
        z_inv = _herm(np.linalg.inv(z))

        # Schur complement M = A W (.) W A^T plus the slack diagonal
        mmat = np.zeros((m, m))
        wgw = [w @ g @ w for g in data.gen_mats]
        absw2 = np.abs(w) ** 2
        pin_rows = [pr for pr, _, _ in data.pins]
        pin_idx = [k for _, k, _ in data.pins]
        pin_scale = np.array([sc for _, _, sc in data.pins])
        if pin_rows:
            sub = absw2[np.ix_(pin_idx, pin_idx)]
            mmat[np.ix_(pin_rows, pin_rows)] = sub * np.outer(pin_scale, pin_scale)
            for gj, (grow, gw) in enumerate(zip(data.gen_rows, wgw)):
                col = np.real(np.diagonal(gw))[pin_idx] * pin_scale
                mmat[pin_rows, grow] = col
                mmat[grow, pin_rows] = col
        for gi, (grow_i, g_i) in enumerate(zip(data.gen_rows, data.gen_mats)):
            for gj, grow_j in enumerate(data.gen_rows):
                mmat[grow_i, grow_j] = _inner(g_i, wgw[gj])
        if p:
            mmat[data.slack_rows, data.slack_rows] += w2

        w_rd_w = w @ rd_mat @ w

        def direction(rc_mat, rc_t):
            rhs = rp - data.apply(rc_mat) + data.apply(w_rd_w)
            if p:
                rhs[data.slack_rows] += rc_t - w2 * rd_t
            dy = _solve_spd(mmat, rhs)
            dz = rd_mat - data.adjoint(dy)
            dx = _herm(rc_mat - w @ dz @ w)
            if p:
                ds = rd_t + dy[data.slack_rows]
                dt = rc_t - w2 * ds
            else:
                ds = dt = np.zeros(0)
            return dx, dt, dy, dz, ds

        # predictor
        dx_a, dt_a, dy_a, dz_a, ds_a = direction(-x, -t)
        ap = min(1.0, _STEP_FRAC * min(_max_step_psd(x, dx_a), _max_step_vec(t, dt_a)))
        ad = min(1.0, _STEP_FRAC * min(_max_step_psd(z, dz_a), _max_step_vec(s, ds_a)))
        mu_aff = (_inner(x + ap * dx_a, z + ad * dz_a)
                  + (float((t + ap * dt_a) @ (s + ad * ds_a)) if p else 0.0)) / (n + p)
        sigma = min(0.99, max(1e-8, (max(mu_aff, 0.0) / mu) ** 3))

        # corrector (second-order term on the slack block only)
        rc_mat = _herm(sigma * mu * z_inv - x)
        rc_t = sigma * mu / s - t - dt_a * ds_a / s if p else np.zeros(0)
        dx, dt, dy, dz, ds = direction(rc_mat, rc_t)
        ap = min(1.0, _STEP_FRAC * min(_max_step_psd(x, dx), _max_step_vec(t, dt)))
        ad = min(1.0, _STEP_FRAC * min(_max_step_psd(z, dz), _max_step_vec(s, ds)))
        x, ap = _pd_step(x, dx, ap)
        z, ad = _pd_step(z, dz, ad)
        if ap == 0.0 and ad == 0.0:
            break  # stalled; return the best iterate seen so far
        t = t + ap * dt
        y = y + ad * dy
        s = s + ad * ds

    if status != "optimal" and best is not None:
        _, x, y, kkt = best
    obj = _inner(problem.objective, x)
    kkt = dict(kkt)
    kkt["gap_abs"] = abs(_inner(c, x) - float(b @ y)) * c_scale
    kkt["min_eig"] = float(np.linalg.eigvalsh(_herm(x))[0])
    return SdpSolution(x=_herm(x), objective_value=obj, status=status, kkt_residuals=kkt)


def _solve_spd(mmat, rhs):
    try:
        lfac = np.linalg.cholesky(mmat + 1e-13 * np.trace(mmat) / mmat.shape[0] * np.eye(mmat.shape[0]))
        return np.linalg.solve(lfac.conj().T, np.linalg.solve(lfac, rhs))
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(mmat, rhs, rcond=None)[0]


def _infeasibility_certificate(data, y, tol):
    """Farkas-style check: a scaled y with b^T y > 0 and A^T(y) <= 0 proves
    primal infeasibility (slack rows additionally need y >= 0)."""
    norm_y = float(np.linalg.norm(y))
    if norm_y < 1e6:
        return False
    yn = y / norm_y
    if float(data.b @ yn) <= 100.0 * tol:
        return False
    if data.n_in and float(np.min(yn[data.slack_rows])) < -1e-8:
        return False
    lam_max = float(np.linalg.eigvalsh(data.adjoint(yn))[-1])
    return lam_max <= 1e-8


def _solve_admm(problem, tol, max_iter):
    """Dual alternating-direction fallback; modest accuracy, used only when the
    interior-point loop does not certify optimality."""
    data = _Data(problem)
    n, m, p = data.n, data.m, data.n_in
    c_raw = -problem.objective
    c_scale = max(1.0, float(np.linalg.norm(c_raw)))
    c = c_raw / c_scale
    b = data.b.copy()

    def apply_ext(xmat, tvec):
        out = data.apply(xmat)
        if p:
            out[data.slack_rows] -= tvec
        return out

    gram = np.zeros((m, m))
    basis = []
    for row in range(m):
        e = np.zeros(m)
        e[row] = 1.0
        basis.append(data.adjoint(e))
    for i in range(m):
        for j in range(i, m):
            gram[i, j] = gram[j, i] = _inner(basis[i], basis[j])
    if p:
        gram[data.slack_rows, data.slack_rows] += 1.0
    try:
        gram_chol = np.linalg.cholesky(gram + 1e-12 * np.eye(m))
    except np.linalg.LinAlgError:
        return None

    x = np.eye(n, dtype=complex)
    t = np.ones(p)
    smat = np.zeros((n, n), dtype=complex)
    st = np.zeros(p)
    mu = 1.0
    b_norm = 1.0 + float(np.linalg.norm(b))
    c_norm = 1.0 + float(np.linalg.norm(c))
    status = "max_iter"
    prim = dual = gap = math.inf
    for it in range(max_iter):
        rhs = -(mu * (apply_ext(x, t) - b) + apply_ext(smat - c, st))
        y = np.linalg.solve(gram_chol.conj().T, np.linalg.solve(gram_chol, rhs))
        v = c - data.adjoint(y) - mu * x
        vt = y[data.slack_rows] - mu * t if p else np.zeros(0)
        lam, u = np.linalg.eigh(_herm(v))
        smat = (u * np.maximum(lam, 0.0)) @ u.conj().T
        x = _herm((smat - v) / mu)
        if p:
            st = np.maximum(vt, 0.0)
            t = (st - vt) / mu
        prim = float(np.linalg.norm(apply_ext(x, t) - b)) / b_norm
        dual_mat = c - data.adjoint(y) - smat
        dual_t = y[data.slack_rows] - st if p else np.zeros(0)
        dual = math.hypot(float(np.linalg.norm(dual_mat)), float(np.linalg.norm(dual_t))) / c_norm
        pobj = _inner(c, x)
        dobj = float(b @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        if prim <= tol and dual <= tol and gap <= 10.0 * tol:
            status = "optimal"
            break
        if it % 50 == 49:
            # rebalance the penalty toward whichever residual lags
            if prim > 10.0 * dual:
                mu *= 2.0
            elif dual > 10.0 * prim:
                mu *= 0.5
    obj = _inner(problem.objective, x)
    kkt = {"primal": prim, "dual": dual, "gap": gap,
           "min_eig": float(np.linalg.eigvalsh(_herm(x))[0])}
    return SdpSolution(x=_herm(x), objective_value=obj, status=status, kkt_residuals=kkt)


# --- real embedding ---------------------------------------------------------

def embed_matrix(h):
    """Map a Hermitian matrix to the real-symmetric form [[Re, -Im], [Im, Re]]."""
    h = np.asarray(h, dtype=complex)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def unembed_matrix(y):
    """Inverse of embed_matrix (projects onto the embedded subspace first)."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0] // 2
    tl, tr = y[:n, :n], y[:n, n:]
    bl, br = y[n:, :n], y[n:, n:]
    return 0.5 * (tl + br) + 0.5j * (bl - tr)


def real_embed(problem: SdpProblem) -> SdpProblem:
    """Equivalent real-symmetric problem of size 2*dim.

    Tr(embed(A) embed(X)) doubles Re Tr(A X), so all data matrices carry a
    factor 1/2; optimal values then coincide with the complex problem.
    """
    return SdpProblem(
        dim=2 * problem.dim,
        objective=0.5 * embed_matrix(problem.objective),
        eq_constraints=[(0.5 * embed_matrix(a), b) for a, b in problem.eq_constraints],
        ineq_constraints=[(0.5 * embed_matrix(a), c) for a, c in problem.ineq_constraints],
    )


# --- plain-text dump/load for debugging -------------------------------------

def dump_problem(problem: SdpProblem, path):
    """Write the problem in a line-oriented text format (see load_problem)."""
    lines = [f"dim {problem.dim}", "objective"]
    lines.extend(_matrix_lines(problem.objective))
    for a, b in problem.eq_constraints:
        lines.append(f"eq {b!r}")
        lines.extend(_matrix_lines(a))
    for a, c in problem.ineq_constraints:
        lines.append(f"ineq {c!r}")
        lines.extend(_matrix_lines(a))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_problem(path) -> SdpProblem:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("dim "):
        raise ValueError("bad problem file: missing 'dim' header")
    dim = int(lines[0].split()[1])
    pos = 1
    objective = None
    eqs, ineqs = [], []
    while pos < len(lines):
        head = lines[pos].split()
        pos += 1
        mat = np.array([[complex(v) for v in lines[pos + i].split()] for i in range(dim)])
        pos += dim
        if head[0] == "objective":
            objective = mat
        elif head[0] == "eq":
            eqs.append((mat, float(head[1])))
        elif head[0] == "ineq":
            ineqs.append((mat, float(head[1])))
        else:
            raise ValueError(f"bad section {head[0]!r}")
    return SdpProblem(dim=dim, objective=objective, eq_constraints=eqs, ineq_constraints=ineqs)


def _matrix_lines(a):
    return [" ".join(repr(complex(v)).strip("()") for v in row) for row in np.asarray(a, dtype=complex)]

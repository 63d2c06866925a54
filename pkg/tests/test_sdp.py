import numpy as np
import pytest

from starcov.sdp import (SdpProblem, dump_problem, embed_matrix, load_problem,
                         real_embed, solve, unembed_matrix)


def unit_diag_problem(c):
    d = c.shape[0]
    eqs = []
    for k in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[k, k] = 1.0
        eqs.append((e, 1.0))
    return SdpProblem(dim=d, objective=c, eq_constraints=eqs)


def random_hermitian(rng, d):
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (m + m.conj().T)


def test_diagonal_objective_is_pinned():
    sol = solve(unit_diag_problem(np.diag([3.0, 1.0, 2.0]).astype(complex)))
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(6.0, abs=1e-7)


def test_analytic_two_by_two():
    c = np.array([[0, 1], [1, 0]], dtype=complex)
    sol = solve(unit_diag_problem(c))
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(2.0, abs=1e-7)
    assert sol.x[0, 1] == pytest.approx(1.0, abs=1e-5)


def test_rank_one_objective_vs_phase_grid():
    rng = np.random.default_rng(2)
    for d in (2, 3):
        h = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        sol = solve(unit_diag_problem(np.outer(h, h.conj())))
        # exhaustive phase grid (global phase fixed on element 0)
        grid = np.arange(360) * 2 * np.pi / 360
        if d == 2:
            vals = np.abs(h[0] + h[1] * np.exp(1j * grid)) ** 2
        else:
            e1 = np.exp(1j * grid)[:, None]
            e2 = np.exp(1j * grid)[None, :]
            vals = np.abs(h[0] + h[1] * e1 + h[2] * e2) ** 2
        best = float(vals.max())
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(best, rel=1e-3)
        assert sol.objective_value >= best - 1e-9  # relaxation never below the grid


def test_random_instances_certified():
    rng = np.random.default_rng(11)
    for _ in range(40):
        d = int(rng.integers(2, 13))
        sol = solve(unit_diag_problem(random_hermitian(rng, d)))
        assert sol.status == "optimal"
        gap = sol.kkt_residuals["gap_abs"]
        assert gap <= 1e-6 * (1.0 + abs(sol.objective_value))
        # PSD to tolerance
        trace = float(np.trace(sol.x).real)
        assert sol.kkt_residuals["min_eig"] >= -1e-7 * trace
        # equality residuals
        assert np.allclose(np.diagonal(sol.x).real, 1.0, atol=1e-6)


def test_inequality_constraint_analytic():
    # maximize 2 Re X12 subject to 2 Im X12 >= 1 on the unit-diagonal set:
    # |X12| <= 1 makes the optimum sqrt(3)/2 + j/2
    c = np.array([[0, 1], [1, 0]], dtype=complex)
    a = np.array([[0, 1j], [-1j, 0]], dtype=complex)
    prob = unit_diag_problem(c)
    prob.ineq_constraints.append((a, 1.0))
    sol = solve(prob)
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(np.sqrt(3.0), abs=1e-6)
    assert sol.x[0, 1].imag == pytest.approx(0.5, abs=1e-5)


def test_infeasible_is_flagged():
    c = np.array([[0, 1], [1, 0]], dtype=complex)
    e11 = np.zeros((2, 2), dtype=complex)
    e11[0, 0] = 1.0
    prob = unit_diag_problem(c)
    prob.ineq_constraints.append((e11, 2.0))  # contradicts X11 = 1
    sol = solve(prob)
    assert sol.status == "infeasible"


def test_scaling_equivariance():
    rng = np.random.default_rng(5)
    c = random_hermitian(rng, 6)
    s1 = solve(unit_diag_problem(c))
    s3 = solve(unit_diag_problem(3.0 * c))
    assert s3.objective_value == pytest.approx(3.0 * s1.objective_value, rel=1e-7)
    assert np.abs(s3.x - s1.x).max() < 1e-5


def test_embed_round_trip_and_psd_equivalence():
    rng = np.random.default_rng(8)
    for _ in range(100):
        d = int(rng.integers(1, 7))
        h = random_hermitian(rng, d)
        np.testing.assert_allclose(unembed_matrix(embed_matrix(h)), h, atol=1e-14)
        min_c = float(np.linalg.eigvalsh(h)[0])
        min_r = float(np.linalg.eigvalsh(embed_matrix(h))[0])
        assert (min_c >= 0) == (min_r >= -1e-12 * max(1.0, abs(min_r)))
        # embedded spectrum doubles the complex one
        assert min_r == pytest.approx(min_c, rel=1e-10, abs=1e-12)


def test_embedded_solve_matches_native():
    c = np.array([[1.0, 0.3 - 0.4j], [0.3 + 0.4j, -0.5]], dtype=complex)
    prob = unit_diag_problem(c)
    native = solve(prob)
    embedded = solve(real_embed(prob))
    assert abs(native.objective_value - embedded.objective_value) < 1e-8 * (
        1 + abs(native.objective_value))


def test_hermitian_validation():
    bad = np.array([[0, 1], [2, 0]], dtype=complex)
    with pytest.raises(ValueError, match="Hermitian"):
        SdpProblem(dim=2, objective=bad)
    with pytest.raises(ValueError):
        SdpProblem(dim=3, objective=np.eye(2, dtype=complex))


def test_dump_load_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    prob = unit_diag_problem(random_hermitian(rng, 3))
    prob.ineq_constraints.append((random_hermitian(rng, 3), 0.25))
    path = tmp_path / "prob.txt"
    dump_problem(prob, path)
    back = load_problem(path)
    assert back.dim == prob.dim
    np.testing.assert_allclose(back.objective, prob.objective, atol=0)
    np.testing.assert_allclose(back.ineq_constraints[0][0],
                               prob.ineq_constraints[0][0], atol=0)
    assert back.ineq_constraints[0][1] == prob.ineq_constraints[0][1]
    assert solve(back).objective_value == pytest.approx(
        solve(prob).objective_value, rel=1e-9)


def test_warm_start_accepts_previous_iterate():
    rng = np.random.default_rng(21)
    c = random_hermitian(rng, 5)
    prob = unit_diag_problem(c)
    cold = solve(prob)
    warm = solve(prob, x0=cold.x)
    assert warm.status == "optimal"
    assert warm.objective_value == pytest.approx(cold.objective_value, rel=1e-6)

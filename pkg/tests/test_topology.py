import cvxpy as cp
import numpy as np
import pytest

from prodgraph.graphs import Graph, gen_erdos_renyi, gen_path, interaction_matrix, sym_evd
from prodgraph.topology import (
    SolverOptions,
    SpecTempProblem,
    TemplateError,
    binarize,
    f1_score,
    interaction_edges,
    reconstruct_interaction,
    solve_spectemp,
    threshold_sweep,
)


def reference_solve(v, rho=40.0, eps=1e-6):
    """Long-run interior-point solution of the template program (lam kept explicit)."""
    d = v.shape[0]
    a = cp.Variable((d, d), symmetric=True)
    lam = cp.Variable(d)
    fit = a - v @ cp.diag(lam) @ v.T
    objective = cp.sum(cp.abs(a)) + rho / 2 * cp.sum_squares(fit)
    cons = [cp.abs(cp.diag(a)) <= eps, a @ np.ones(d) >= 1]
    prob = cp.Problem(cp.Minimize(objective), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return prob.value, a.value


def test_template_must_be_orthonormal():
    with pytest.raises(TemplateError):
        SpecTempProblem(np.ones((3, 3)))
    with pytest.raises(TemplateError):
        SpecTempProblem(np.eye(3)[:, :2])


def test_rho_must_be_positive():
    with pytest.raises(ValueError):
        SpecTempProblem(np.eye(3), rho=0.0)


def test_k3_template():
    v = sym_evd(1 - np.eye(3)).vectors
    rep = solve_spectemp(SpecTempProblem(v))
    assert rep.converged
    off = rep.a_hat[~np.eye(3, dtype=bool)]
    assert np.ptp(off) < 1e-6
    assert off.min() >= 0.5 - 1e-6
    assert np.all(np.abs(np.diag(rep.a_hat)) <= 1e-6 + 1e-9)
    for thr in (0.1, 0.5, 0.9):
        np.testing.assert_array_equal(binarize(rep.a_hat, thr), 1 - np.eye(3))
    ref_value, _ = reference_solve(v)
    assert abs(rep.objective - ref_value) <= 1e-6 * ref_value


def test_identity_template_matches_reference():
    rep = solve_spectemp(SpecTempProblem(np.eye(4)))
    ref_value, _ = reference_solve(np.eye(4))
    assert abs(rep.objective - ref_value) <= 1e-5 * ref_value
    assert SpecTempProblem(np.eye(4)).violation(rep.a_hat) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_random_templates_match_reference(seed):
    rng = np.random.default_rng(seed)
    v = sym_evd(gen_erdos_renyi(6, 0.5, rng).adj + 0.01 * np.diag(rng.standard_normal(6))).vectors
    p = SpecTempProblem(v)
    rep = solve_spectemp(p)
    ref_value, _ = reference_solve(v)
    assert rep.converged
    assert abs(rep.objective - ref_value) / ref_value < 1e-4
    assert p.violation(rep.a_hat) < 1e-6
    np.testing.assert_allclose(rep.a_hat, rep.a_hat.T, atol=1e-8)


def test_lambda_is_template_projection(rng):
    v = sym_evd(gen_erdos_renyi(5, 0.5, rng).adj).vectors
    rep = solve_spectemp(SpecTempProblem(v))
    np.testing.assert_allclose(rep.lambda_hat, np.diag(v.T @ rep.a_hat @ v), atol=1e-12)


def test_iteration_cap_reports_not_converged(rng):
    v = sym_evd(gen_erdos_renyi(6, 0.5, rng).adj).vectors
    rep = solve_spectemp(SpecTempProblem(v), SolverOptions(max_iter=3))
    assert not rep.converged and rep.iterations == 3


def test_report_json(rng):
    import json

    rep = solve_spectemp(SpecTempProblem(np.eye(3)))
    d = json.loads(rep.to_json())
    assert d["converged"] and len(d["a_hat"]) == 3


# --- reassembly and scoring ----------------------------------------------------

def test_reconstruct_true_factors(rng):
    gc, gg = gen_path(3), gen_erdos_renyi(5, 0.4, rng)
    g = reconstruct_interaction(gc.adj, gg.adj, (0.1, 0.2, 0.7))
    np.testing.assert_array_equal(g.adj, interaction_matrix(gc.adj, gg.adj, (0.1, 0.2, 0.7)))


def test_reconstruct_zero_factors():
    g = reconstruct_interaction(np.zeros((2, 2)), np.zeros((3, 3)), (0.2, 0.3, 0.5))
    np.testing.assert_array_equal(g.adj, 0.0)


def test_binarize_keeps_large_entries():
    a = np.array([[0, 1.0, 0.9], [1.0, 0, 0.1], [0.9, 0.1, 0]])
    np.testing.assert_array_equal(binarize(a, 0.3), [[0, 1, 1], [1, 0, 0], [1, 0, 0]])


def test_binarize_all_zero():
    np.testing.assert_array_equal(binarize(np.zeros((3, 3))), 0)


def test_binarize_accepts_graph():
    np.testing.assert_array_equal(binarize(gen_path(3)), gen_path(3).adj)


def test_f1_cases():
    k4 = 1 - np.eye(4)
    assert f1_score(k4, k4) == 1.0
    a = np.zeros((4, 4))
    a[0, 1] = a[1, 0] = 1
    b = np.zeros((4, 4))
    b[2, 3] = b[3, 2] = 1
    assert f1_score(a, b) == 0.0
    truth = gen_path(5).adj  # edges 01 12 23 34
    est = truth.copy()
    est[3, 4] = est[4, 3] = 0
    est[0, 4] = est[4, 0] = 1
    assert f1_score(est, truth) == pytest.approx(0.75)


def test_interaction_edges_modes(rng):
    gc, gg = gen_path(3), gen_erdos_renyi(5, 0.5, rng)
    gamma = (0.01, 0.02, 0.97)
    exact = interaction_matrix(gc.adj, gg.adj, gamma) > 0
    np.testing.assert_array_equal(interaction_edges(gc.adj, gg.adj, gamma), exact)
    # a global threshold discards the weak Cartesian blocks
    lit = interaction_edges(gc.adj, gg.adj, gamma, mode="interaction")
    assert lit.sum() < exact.sum()
    with pytest.raises(ValueError):
        interaction_edges(gc.adj, gg.adj, gamma, mode="nope")


def test_exact_templates_recover_graph_at_large_rho():
    # with a stiff template penalty the optimum is the true (scaled) adjacency
    rng = np.random.default_rng(4)
    gamma = (0.1, 0.2, 0.7)
    gc = gen_path(3)
    rep_c = solve_spectemp(SpecTempProblem(sym_evd(gc.adj).vectors, rho=4000.0))
    hits = 0
    for _ in range(10):
        gg = gen_erdos_renyi(10, 0.4, rng)
        rep_g = solve_spectemp(SpecTempProblem(sym_evd(gg.adj).vectors, rho=4000.0))
        f1 = f1_score(interaction_edges(rep_c.a_hat, rep_g.a_hat, gamma),
                      interaction_edges(gc.adj, gg.adj, gamma))
        hits += f1 == 1.0
    assert hits >= 9


def test_threshold_sweep_shape(rng):
    g = gen_erdos_renyi(6, 0.5, rng).adj
    sweep = threshold_sweep(g, g)
    assert set(sweep) == {0.1, 0.2, 0.3, 0.4, 0.5}
    assert all(v == 1.0 for v in sweep.values())

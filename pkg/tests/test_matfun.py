"""Krylov decompositions, spectral evaluation, and the exact dense core."""

from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg as sla

from sampled_centrality import (
    EvaluationError,
    SampleSet,
    SparseGraph,
    arnoldi,
    dense_matfun,
    direct_core_evaluation,
    estimate_spectral_radius,
    evaluate_masked_function,
    exp_minus_one,
    lanczos,
    resolvent_minus_one,
    sample_columns,
    spectral_factorize,
    transpose_measures,
)
from sampled_centrality.graph import ColumnMaskedOperator
from sampled_centrality.matfun import ScalarFunction, _masked_function_columns
from conftest import (
    directed_edge,
    full_column_sample,
    full_row_sample,
    rel_err,
    star,
    triangle,
    undirected_edge,
)


def _er_digraph(n, p, seed):
    rng = np.random.default_rng(seed)
    block = rng.random((n, n)) < p
    np.fill_diagonal(block, False)
    rows, cols = np.nonzero(block)
    return SparseGraph.from_edges(n, np.column_stack([rows, cols]), directed=True)


def _masked_dense(g, mask):
    a = g.dense()
    keep = np.zeros(g.n)
    keep[mask.indices] = 1.0
    return a * keep[np.newaxis, :]


# -- scalar functions ---------------------------------------------------------


def test_scalar_function_values():
    f = exp_minus_one(2.0)
    assert np.isclose(f.value(1.0), np.expm1(2.0))
    assert np.isclose(f.quotient(0.0).real, 2.0)  # gamma * phi1(0)
    r = resolvent_minus_one(0.25)
    assert np.isclose(r.value(2.0), 1.0 / (1 - 0.5) - 1.0)
    assert np.isclose(r.quotient(0.0).real, 0.25)


def test_scalar_function_validation():
    with pytest.raises(ValueError):
        ScalarFunction("log", 1.0)
    with pytest.raises(ValueError):
        exp_minus_one(0.0)


def test_matrix_quotient_handles_singular_core():
    f = exp_minus_one(1.0)
    g11 = f.matrix_quotient(np.zeros((1, 1)))
    assert np.allclose(g11, [[1.0]])
    # agreement with eigenvalue evaluation on a diagonalizable core
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    lam, q = np.linalg.eigh(a)
    expected = (q * f.quotient(lam).real) @ q.T
    assert np.allclose(f.matrix_quotient(a), expected, atol=1e-13)


# -- Arnoldi ------------------------------------------------------------------


def test_arnoldi_two_cycle_closed_form():
    g = undirected_edge()
    mask = full_column_sample(g)
    d = arnoldi(g, mask, v1=np.array([1.0, 0.0]))
    assert d.breakdown
    assert d.steps == 2
    assert np.allclose(d.basis, np.eye(2))
    assert np.allclose(d.small_matrix, [[0.0, 1.0], [1.0, 0.0]])


def test_arnoldi_nilpotent_masked_edge():
    g = directed_edge()
    mask = SampleSet(np.array([1]), "column", "guided", 0, 2)
    d = arnoldi(g, mask, seed=0)
    assert d.breakdown
    assert d.steps <= 2
    # H is nilpotent to machine precision; its computed eigenvalues scatter
    # at the sqrt(eps) scale typical of defective matrices, so the nonzero
    # classification rejects the spectral route for this mask
    assert np.max(np.abs(d.small_matrix @ d.small_matrix)) <= 1e-12
    sd = spectral_factorize(d)
    assert np.all(np.abs(sd.eigenvalues) <= 1e-7)
    res = evaluate_masked_function(g, mask, exp_minus_one(1.0), seed=0)
    assert res.method == "direct_core"


def test_arnoldi_er_digraph_breakdown_and_invariance():
    g = _er_digraph(60, 0.1, seed=17)
    mask = sample_columns(g, 20, seed=3)
    d = arnoldi(g, mask, seed=5)
    assert d.breakdown
    assert d.steps <= 21
    op = ColumnMaskedOperator(g, mask.indices)
    assert d.invariance_residual(op) <= 1e-10
    orth = np.max(np.abs(d.basis.T @ d.basis - np.eye(d.steps)))
    assert orth <= 1e-10


def test_arnoldi_requires_column_mask():
    g = directed_edge()
    rows = SampleSet(np.array([0]), "row", "guided", 0, 2)
    with pytest.raises(ValueError, match="column"):
        arnoldi(g, rows)


# -- Lanczos ------------------------------------------------------------------


def test_lanczos_two_cycle_closed_form():
    g = undirected_edge()
    mask = full_column_sample(g)
    d = lanczos(g, mask, v1=np.array([1.0, 0.0]))
    assert d.breakdown
    assert d.steps == 2
    assert np.allclose(np.abs(d.small_matrix), [[0.0, 1.0], [1.0, 0.0]], atol=1e-14)


def test_lanczos_star_center_mask_covers_matrix():
    g = star(3)
    mask = SampleSet(np.array([0]), "column", "guided", 0, 4)
    f = exp_minus_one(1.0)
    res = evaluate_masked_function(g, mask, f, seed=2)
    exact = dense_matfun(g.dense(), f)
    assert rel_err(res.diag, np.diagonal(exact)) <= 1e-10
    assert rel_err(res.rowsum, exact @ np.ones(4)) <= 1e-10


def test_lanczos_triangle_ritz_values():
    g = triangle()
    d = lanczos(g, full_column_sample(g), seed=1)
    ritz = np.sort(np.linalg.eigvalsh(d.small_matrix))
    for value in ritz:
        assert min(abs(value - 2.0), abs(value + 1.0)) <= 1e-10


def test_lanczos_rejects_directed():
    g = directed_edge()
    with pytest.raises(ValueError, match="undirected"):
        lanczos(g, SampleSet(np.array([1]), "column", "guided", 0, 2))


def test_lanczos_tridiagonal_and_orthonormal():
    rng = np.random.default_rng(8)
    edges = rng.integers(0, 40, size=(150, 2))
    g = SparseGraph.from_edges(40, edges, directed=False)
    mask = sample_columns(g, 10, seed=2)
    d = lanczos(g, mask, seed=4)
    T = d.small_matrix
    assert np.allclose(T, T.T)
    assert np.allclose(T - np.diag(np.diag(T)) - np.diag(np.diag(T, 1), 1) - np.diag(np.diag(T, -1), -1), 0.0)
    assert np.max(np.abs(d.basis.T @ d.basis - np.eye(d.steps))) <= 1e-10
    assert d.steps <= 2 * len(mask) + 1


# -- spectral factorization ---------------------------------------------------


def test_spectral_factorize_tie_order():
    g = undirected_edge()
    d = arnoldi(g, full_column_sample(g), v1=np.array([1.0, 0.0]))
    sd = spectral_factorize(d)
    assert np.allclose(sd.eigenvalues, [1.0, -1.0])
    assert sd.condition_estimate < 1.0 + 1e-8
    assert estimate_spectral_radius(sd) == pytest.approx(1.0)


def test_spectral_factorize_lanczos_orthogonal():
    g = triangle()
    d = lanczos(g, full_column_sample(g), seed=0)
    sd = spectral_factorize(d)
    assert sd.condition_estimate == 1.0


def test_spectral_factorize_defective_flags_condition():
    from sampled_centrality.matfun import KrylovDecomposition

    d = KrylovDecomposition(
        basis=np.eye(2),
        small_matrix=np.array([[0.0, 0.0], [1.0, 0.0]]),
        steps=2,
        breakdown=True,
        residual_norm=0.0,
        kind="arnoldi",
    )
    sd = spectral_factorize(d)
    assert sd.condition_estimate > 1e8


def test_spectral_factorize_requires_breakdown():
    from sampled_centrality.matfun import KrylovDecomposition

    d = KrylovDecomposition(
        basis=np.eye(2),
        small_matrix=np.eye(2),
        steps=2,
        breakdown=False,
        residual_norm=0.5,
        kind="arnoldi",
    )
    with pytest.raises(EvaluationError, match="breakdown"):
        spectral_factorize(d)


def test_estimate_spectral_radius_fixtures():
    for g, expected in ((star(3), np.sqrt(3)), (triangle(), 2.0)):
        d = lanczos(g, full_column_sample(g), seed=3)
        sd = spectral_factorize(d)
        assert estimate_spectral_radius(sd) == pytest.approx(expected, abs=1e-10)


# -- evaluation ---------------------------------------------------------------


def test_evaluate_two_cycle_exponential():
    g = undirected_edge()
    res = evaluate_masked_function(g, full_column_sample(g), exp_minus_one(1.0), seed=0)
    c = np.cosh(1.0) - 1.0
    s = np.sinh(1.0)
    assert np.allclose(res.diag, [c, c], atol=1e-10)
    assert np.allclose(res.rowsum, [c + s, c + s], atol=1e-10)


def test_evaluate_nilpotent_masked_edge():
    g = directed_edge()
    mask = SampleSet(np.array([1]), "column", "guided", 0, 2)
    res = evaluate_masked_function(g, mask, exp_minus_one(1.0), seed=0)
    assert res.diag.tolist() == [0.0, 0.0]
    assert res.rowsum.tolist() == [1.0, 0.0]
    assert res.method == "direct_core"


def test_evaluate_two_cycle_resolvent():
    g = undirected_edge()
    res = evaluate_masked_function(g, full_column_sample(g), resolvent_minus_one(0.5), seed=0)
    assert np.allclose(res.diag, [1.0 / 3.0, 1.0 / 3.0], atol=1e-12)
    assert np.allclose(res.rowsum, [1.0, 1.0], atol=1e-12)


def test_evaluate_rejects_inadmissible_katz_gamma():
    g = undirected_edge()  # rho = 1
    with pytest.raises(EvaluationError, match="inadmissible"):
        evaluate_masked_function(g, full_column_sample(g), resolvent_minus_one(0.99), seed=0)


def test_evaluate_diag_zero_outside_mask():
    g = _er_digraph(50, 0.15, seed=4)
    mask = sample_columns(g, 12, seed=6)
    res = evaluate_masked_function(g, mask, exp_minus_one(1.0), seed=1)
    outside = np.setdiff1d(np.arange(g.n), mask.indices)
    assert np.all(res.diag[outside] == 0.0)


def test_evaluate_full_sampling_exactness_directed():
    f = exp_minus_one(1.0)
    for seed in range(4):
        g = _er_digraph(40, 0.12, seed=seed)
        mask = full_column_sample(g)
        res = evaluate_masked_function(g, mask, f, seed=seed)
        exact = dense_matfun(g.dense(), f)
        assert rel_err(res.diag, np.diagonal(exact)) <= 1e-6
        assert rel_err(res.rowsum, exact @ np.ones(g.n)) <= 1e-6


def test_evaluate_full_sampling_exactness_symmetric():
    # the Lanczos route reconstructs f exactly when the nonzero spectrum is
    # simple; fixtures are filtered accordingly
    f = exp_minus_one(1.0)
    checked = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        edges = rng.integers(0, 24, size=(60, 2))
        g = SparseGraph.from_edges(24, edges, directed=False)
        eigs = np.linalg.eigvalsh(g.dense())
        nonzero = np.sort(eigs[np.abs(eigs) > 1e-8])
        if nonzero.size > 1 and np.min(np.diff(nonzero)) < 1e-6:
            continue
        res = evaluate_masked_function(g, full_column_sample(g), f, seed=seed)
        exact = dense_matfun(g.dense(), f)
        assert rel_err(res.diag, np.diagonal(exact)) <= 1e-6
        assert rel_err(res.rowsum, exact @ np.ones(g.n)) <= 1e-6
        checked += 1
    assert checked >= 3


def test_method_equivalence_on_random_instances():
    rng = np.random.default_rng(99)
    compared = 0
    for trial in range(25):
        n = int(rng.integers(20, 80))
        g = _er_digraph(n, float(rng.uniform(0.15, 0.3)), seed=trial + 100)
        nz = g.nonzero_columns()
        if nz.size < 4:
            continue
        ell = int(rng.integers(4, min(25, nz.size + 1)))
        mask = sample_columns(g, ell, seed=trial)
        f = exp_minus_one(1.0)
        res = evaluate_masked_function(g, mask, f, seed=trial)
        if res.method != "krylov_spectral" or res.condition_estimate > 1e6:
            continue
        core = direct_core_evaluation(g, mask, f)
        assert rel_err(res.diag, core.diag) <= 1e-8
        assert rel_err(res.rowsum, core.rowsum) <= 1e-8
        compared += 1
    assert compared >= 5


# -- direct core --------------------------------------------------------------


def test_direct_core_nilpotent_edge():
    g = directed_edge()
    mask = SampleSet(np.array([1]), "column", "guided", 0, 2)
    res = direct_core_evaluation(g, mask, exp_minus_one(1.0))
    assert res.diag.tolist() == [0.0, 0.0]
    assert res.rowsum.tolist() == [1.0, 0.0]


def test_direct_core_small_gamma_first_order():
    g = _er_digraph(30, 0.2, seed=12)
    mask = sample_columns(g, 8, seed=1)
    gamma = 1e-8
    res = direct_core_evaluation(g, mask, exp_minus_one(gamma))
    keep = np.zeros(g.n)
    keep[mask.indices] = 1.0
    degrees_into_mask = g.dense() @ keep
    assert np.max(np.abs(res.diag)) <= 1e-12
    assert np.allclose(res.rowsum / gamma, degrees_into_mask, atol=1e-6)


def test_direct_core_agrees_with_dense_masked_function():
    f = exp_minus_one(0.7)
    g = _er_digraph(40, 0.18, seed=3)
    mask = sample_columns(g, 15, seed=2)
    res = direct_core_evaluation(g, mask, f)
    exact = sla.expm(0.7 * _masked_dense(g, mask)) - np.eye(g.n)
    assert rel_err(res.diag, np.diagonal(exact)) <= 1e-10
    assert rel_err(res.rowsum, exact @ np.ones(g.n)) <= 1e-10


def test_direct_core_resolvent_pole_detected():
    g = undirected_edge()
    mask = full_column_sample(g)
    with pytest.raises(EvaluationError, match="pole"):
        direct_core_evaluation(g, mask, resolvent_minus_one(1.0))


def test_direct_core_respects_cap():
    g = _er_digraph(30, 0.2, seed=1)
    mask = sample_columns(g, 10, seed=0)
    with pytest.raises(EvaluationError, match="cap"):
        direct_core_evaluation(g, mask, exp_minus_one(1.0), dense_cap=5)


# -- structural invariants ----------------------------------------------------


def test_resolvent_identity_on_reconstructed_columns():
    g = _er_digraph(35, 0.2, seed=8)
    mask = sample_columns(g, 10, seed=5)
    rho = np.max(np.abs(np.linalg.eigvals(_masked_dense(g, mask))))
    gamma = 0.5 / max(rho, 1.0)
    f = resolvent_minus_one(gamma)
    G = _masked_function_columns(g, mask, f)
    op = ColumnMaskedOperator(g, mask.indices)
    for pos, j in enumerate(mask.indices):
        x = G[:, pos].copy()
        x[j] += 1.0
        residual = x - gamma * op(x)
        expected = np.zeros(g.n)
        expected[j] = 1.0
        assert np.max(np.abs(residual - expected)) <= 1e-8


def test_nilpotent_series_termination():
    # any DAG adjacency stays nilpotent under masking; the exponential equals
    # the terminating series
    rng = np.random.default_rng(44)
    n = 12
    upper = np.triu(rng.random((n, n)) < 0.4, k=1)
    rows, cols = np.nonzero(upper)
    g = SparseGraph.from_edges(n, np.column_stack([rows, cols]), directed=True)
    mask = sample_columns(g, 6, seed=3)
    res = evaluate_masked_function(g, mask, exp_minus_one(1.0), seed=0)
    masked = _masked_dense(g, mask)
    series = np.zeros((n, n))
    power = np.eye(n)
    factorial = 1.0
    for k in range(1, n):
        power = power @ masked
        factorial *= k
        series += power / factorial
    assert np.max(np.abs(res.diag - np.diagonal(series))) <= 1e-12
    assert np.max(np.abs(res.rowsum - series @ np.ones(n))) <= 1e-12


# -- transpose measures -------------------------------------------------------


def test_transpose_measures_undirected_equals_direct():
    g = triangle()
    rows = full_row_sample(g)
    cols = full_column_sample(g)
    f = exp_minus_one(1.0)
    a = transpose_measures(g, rows, f, seed=3)
    b = evaluate_masked_function(g, cols, f, seed=3)
    assert np.allclose(a.diag, b.diag, atol=1e-10)
    assert np.allclose(a.rowsum, b.rowsum, atol=1e-10)


def test_transpose_measures_nilpotent_edge():
    g = directed_edge()
    rows = SampleSet(np.array([0]), "row", "guided", 0, 2)
    res = transpose_measures(g, rows, exp_minus_one(1.0), seed=0)
    assert res.diag.tolist() == [0.0, 0.0]
    assert res.rowsum.tolist() == [0.0, 1.0]


def test_transpose_measures_diag_identity_full_sampling():
    g = _er_digraph(40, 0.15, seed=21)
    f = exp_minus_one(1.0)
    rows = full_row_sample(g)
    res_t = transpose_measures(g, rows, f, seed=2)
    res = evaluate_masked_function(g, full_column_sample(g), f, seed=2)
    assert rel_err(res_t.diag, res.diag) <= 1e-8


def test_transpose_measures_requires_row_mask():
    g = directed_edge()
    cols = SampleSet(np.array([1]), "column", "guided", 0, 2)
    with pytest.raises(ValueError, match="row"):
        transpose_measures(g, cols, exp_minus_one(1.0))


# -- serialization ------------------------------------------------------------


def test_matfun_result_serialization():
    import json

    g = undirected_edge()
    res = evaluate_masked_function(g, full_column_sample(g), exp_minus_one(1.0), seed=0)
    record = json.loads(res.to_json())
    assert record["metadata"]["method"] == "lanczos"
    assert record["metadata"]["ell"] == 2
    assert len(record["scores"]) == 2
    import io

    buf = io.StringIO()
    res.write_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "node,diag,rowsum"
    assert len(lines) == 3

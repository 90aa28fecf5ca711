"""Diagonal and row sums of f(A_masked) via Krylov decompositions.

Two scalar functions are supported, both with f(0) = 0:

    exp_minus_one:       f(t) = exp(gamma * t) - 1
    resolvent_minus_one: f(t) = 1 / (1 - gamma * t) - 1

For a directed graph the mask zeroes every column outside the sampled set J;
the Arnoldi basis of that operator breaks down once the Krylov space is
exhausted, and the surviving Ritz pairs reconstruct the nonzero columns of
f(A_masked) through a structured solve against the sampled rows of the
eigenvector block.  For an undirected graph the mask keeps entries with a
sampled row or column ("arrow" pattern) and symmetric Lanczos applies.  An
exact dense evaluation of the leading core backs both paths whenever the
spectral route is unusable (no breakdown, defective or ill-conditioned
eigenbasis, rank-deficient core).

The permutation that would move sampled columns first is never materialized:
everything is indexed in original node order, with the selection order of J
defining the leading block.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np
import scipy.linalg as sla

from .graph import ArrowMaskedOperator, ColumnMaskedOperator, SparseGraph, transpose
from .sampling import SampleSet

EXP_MINUS_ONE = "exp_minus_one"
RESOLVENT_MINUS_ONE = "resolvent_minus_one"


class EvaluationError(RuntimeError):
    """A matrix-function evaluation could not be completed."""


@dataclass(frozen=True)
class ScalarFunction:
    """One of the two admissible scalar functions, with its scaling gamma."""

    kind: str
    gamma: float

    def __post_init__(self):
        if self.kind not in (EXP_MINUS_ONE, RESOLVENT_MINUS_ONE):
            raise ValueError(f"unknown function kind {self.kind!r}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def value(self, z):
        """f(z), elementwise; complex inputs allowed."""
        w = self.gamma * np.asarray(z)
        if self.kind == EXP_MINUS_ONE:
            return np.expm1(w)
        return w / (1.0 - w)

    def quotient(self, z):
        """g(z) = f(z)/z with the removable singularity patched at 0."""
        z = np.asarray(z, dtype=complex)
        w = self.gamma * z
        if self.kind == EXP_MINUS_ONE:
            small = np.abs(w) < 1e-6
            ws = np.where(small, 0.0, w)
            out = np.where(small, 1.0 + w / 2 + w * w / 6, np.expm1(ws) / np.where(small, 1.0, ws))
            return self.gamma * out
        return self.gamma / (1.0 - w)

    def matrix_value(self, a: np.ndarray) -> np.ndarray:
        """f evaluated at a small dense matrix."""
        a = np.asarray(a, dtype=np.float64)
        m = a.shape[0]
        if self.kind == EXP_MINUS_ONE:
            return sla.expm(self.gamma * a) - np.eye(m)
        shifted = np.eye(m) - self.gamma * a
        _check_resolvent_pole(shifted)
        return sla.solve(shifted, np.eye(m)) - np.eye(m)

    def matrix_quotient(self, a: np.ndarray) -> np.ndarray:
        """g(t) = f(t)/t evaluated at a small dense matrix (exact at 0)."""
        a = np.asarray(a, dtype=np.float64)
        m = a.shape[0]
        if self.kind == EXP_MINUS_ONE:
            # phi1 block of the augmented exponential handles singular cores
            aug = np.zeros((2 * m, 2 * m))
            aug[:m, :m] = self.gamma * a
            aug[:m, m:] = np.eye(m)
            return self.gamma * sla.expm(aug)[:m, m:]
        shifted = np.eye(m) - self.gamma * a
        _check_resolvent_pole(shifted)
        return self.gamma * sla.solve(shifted, np.eye(m))


def exp_minus_one(gamma: float = 1.0) -> ScalarFunction:
    return ScalarFunction(EXP_MINUS_ONE, gamma)


def resolvent_minus_one(gamma: float) -> ScalarFunction:
    return ScalarFunction(RESOLVENT_MINUS_ONE, gamma)


def _check_resolvent_pole(shifted: np.ndarray) -> None:
    if shifted.size == 0:
        return
    cond = np.linalg.cond(shifted)
    if not np.isfinite(cond) or cond > 1e14:
        raise EvaluationError("resolvent pole: I - gamma*A is singular to working precision")


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds for the Krylov evaluation pipeline."""

    breakdown: float = 1e-12       # times the norm of the first Krylov image
    orth: float = 1e-10            # max |V^T V - I|
    invariance: float = 1e-8       # times max(1, rho) on |A V - V H|_F
    zero_eig: float = 1e-10        # times max(1, rho) classifies vanishing Ritz values
    cond_threshold: float = 1e8    # eigenbasis / core-solve conditioning gate
    imag: float = 1e-8             # times max(1, |result|_inf) on residual imaginary parts
    katz_safety: float = 0.95      # require gamma * rho_hat <= this for the resolvent


@dataclass(frozen=True)
class KrylovDecomposition:
    """Orthonormal basis and square small matrix from Arnoldi or Lanczos.

    At breakdown the relation ``A_masked @ basis == basis @ small_matrix``
    holds to the invariance tolerance; ``residual_norm`` is the magnitude of
    the final subdiagonal coefficient.
    """

    basis: np.ndarray
    small_matrix: np.ndarray
    steps: int
    breakdown: bool
    residual_norm: float
    kind: str

    def invariance_residual(self, op: Callable[[np.ndarray], np.ndarray]) -> float:
        image = np.column_stack([op(v) for v in self.basis.T])
        return float(np.linalg.norm(image - self.basis @ self.small_matrix))


@dataclass(frozen=True)
class SpectralData:
    """Eigenpairs of the small matrix, sorted by nonincreasing modulus."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    condition_estimate: float


@dataclass(frozen=True)
class MatfunResult:
    """Per-node diagonal entries and row sums of f(A_masked)."""

    diag: np.ndarray
    rowsum: np.ndarray
    method: str
    spectral_radius_estimate: float
    ell: int
    gamma: float
    function: str
    seed: int | None = None
    steps: int | None = None
    condition_estimate: float | None = None
    fallback_reason: str | None = None

    def metadata(self) -> dict:
        return {
            "method": self.method,
            "ell": int(self.ell),
            "gamma": float(self.gamma),
            "function": self.function,
            "seed": None if self.seed is None else int(self.seed),
            "steps": None if self.steps is None else int(self.steps),
            "spectral_radius_estimate": float(self.spectral_radius_estimate),
            "condition_estimate": None
            if self.condition_estimate is None or not np.isfinite(self.condition_estimate)
            else float(self.condition_estimate),
            "fallback_reason": self.fallback_reason,
        }

    def to_json(self, labels: np.ndarray | None = None) -> str:
        ids = np.arange(self.diag.size) if labels is None else labels
        return json.dumps(
            {
                "metadata": self.metadata(),
                "scores": [
                    {"node": int(ids[i]), "diag": float(self.diag[i]), "rowsum": float(self.rowsum[i])}
                    for i in range(self.diag.size)
                ],
            },
            sort_keys=True,
        )

    def write_csv(self, stream: TextIO, labels: np.ndarray | None = None) -> None:
        ids = np.arange(self.diag.size) if labels is None else labels
        stream.write("node,diag,rowsum\n")
        for i in range(self.diag.size):
            stream.write(f"{int(ids[i])},{self.diag[i]!r},{self.rowsum[i]!r}\n")


# -- Krylov iterations ------------------------------------------------------


def _start_vector(n: int, seed: int, attempt: int) -> np.ndarray:
    rng = np.random.default_rng(seed + attempt)
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _krylov(op, v1: np.ndarray, max_steps: int, tol: float, tridiagonal: bool):
    """Shared Arnoldi/Lanczos loop with full reorthogonalization.

    Returns (V, H, breakdown, residual) where H is square of order len(V.T);
    the below-threshold subdiagonal that triggered breakdown is dropped.
    """
    n = v1.size
    first_image = op(v1)
    scale = float(np.linalg.norm(first_image))
    if scale <= 1e-13:
        return None  # caller redraws the start vector
    threshold = tol * scale

    V = [v1]
    cols: list[np.ndarray] = []
    breakdown = False
    residual = np.inf
    w = first_image
    k = 0
    while True:
        h = np.zeros(k + 2)
        for i, vi in enumerate(V):
            c = vi @ w
            w = w - c * vi
            h[i] = c
        for i, vi in enumerate(V):  # second pass keeps orthogonality at eps
            c = vi @ w
            w = w - c * vi
            h[i] += c
        beta = float(np.linalg.norm(w))
        h[k + 1] = beta
        cols.append(h)
        residual = beta
        if beta <= threshold:
            breakdown = True
            break
        if k + 1 >= max_steps:
            break
        V.append(w / beta)
        k += 1
        w = op(V[k])

    m = len(V)
    H = np.zeros((m, m))
    for c, h in enumerate(cols):
        top = min(c + 2, m)
        H[:top, c] = h[:top]
    if tridiagonal:
        T = np.zeros_like(H)
        d = np.arange(m)
        T[d, d] = H[d, d]
        if m > 1:
            sub = np.diag(H, -1)
            T[d[1:], d[:-1]] = sub
            T[d[:-1], d[1:]] = sub
        H = T
    return np.column_stack(V), H, breakdown, residual


def _run_krylov(
    g: SparseGraph,
    mask: SampleSet,
    seed: int,
    max_steps: int | None,
    tol: float,
    v1: np.ndarray | None,
    symmetric: bool,
) -> KrylovDecomposition:
    ell = len(mask)
    if symmetric:
        op = ArrowMaskedOperator(g, mask.indices)
        cap = min(max_steps if max_steps is not None else 2 * ell + 1, 2 * ell + 1, g.n)
        kind = "lanczos"
    else:
        op = ColumnMaskedOperator(g, mask.indices)
        cap = min(max_steps if max_steps is not None else ell + 1, g.n)
        kind = "arnoldi"

    attempts = 1 if v1 is not None else 5
    for attempt in range(attempts):
        start = v1 if v1 is not None else _start_vector(g.n, seed, attempt)
        out = _krylov(op, start, cap, tol, tridiagonal=symmetric)
        if out is not None:
            V, H, breakdown, residual = out
            return KrylovDecomposition(V, H, V.shape[1], breakdown, residual, kind)
    raise EvaluationError(
        "start vector stagnates under the masked operator after retries"
    )


def arnoldi(
    g: SparseGraph,
    mask: SampleSet,
    seed: int = 0,
    max_steps: int | None = None,
    tol: float = 1e-12,
    v1: np.ndarray | None = None,
) -> KrylovDecomposition:
    """Arnoldi on the column-masked operator; stops at breakdown or max_steps.

    ``v1`` overrides the seeded random start (used by closed-form tests).
    The default step cap is ell + 1, where the Krylov space of a rank-ell
    operator is necessarily exhausted.
    """
    if mask.kind != "column":
        raise ValueError("arnoldi expects a column mask")
    return _run_krylov(g, mask, seed, max_steps, tol, v1, symmetric=False)


def lanczos(
    g: SparseGraph,
    mask: SampleSet,
    seed: int = 0,
    max_steps: int | None = None,
    tol: float = 1e-12,
    v1: np.ndarray | None = None,
) -> KrylovDecomposition:
    """Symmetric Lanczos with full reorthogonalization on the arrow mask.

    The arrow-masked matrix keeps entries with a sampled row or column and
    has rank at most 2*ell, so iteration is capped at min(2*ell + 1, n) and
    the observed breakdown step is reported in the decomposition.
    """
    if g.directed:
        raise ValueError("lanczos requires an undirected graph")
    if mask.kind != "column":
        raise ValueError("lanczos expects a column mask")
    return _run_krylov(g, mask, seed, max_steps, tol, v1, symmetric=True)


def _factorize_small(small: np.ndarray, kind: str) -> SpectralData:
    m = small.shape[0]
    if kind == "lanczos":
        lam, S = np.linalg.eigh(small)
        lam = lam.astype(complex)
        S = S.astype(complex)
        cond = 1.0
    else:
        try:
            lam, S = np.linalg.eig(small)
        except np.linalg.LinAlgError as exc:
            raise EvaluationError(f"eigen-solver failure: {exc}") from exc
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            cond = float(np.linalg.cond(S))
        if np.isnan(cond):
            cond = np.inf
    order = np.lexsort((np.arange(m), -np.abs(lam)))
    return SpectralData(lam[order], S[:, order], cond)


def spectral_factorize(d: KrylovDecomposition) -> SpectralData:
    """Eigenpairs of the small matrix, nonincreasing modulus, stable ties."""
    if not d.breakdown:
        raise EvaluationError(
            "spectral factorization requires a breakdown (invariant) decomposition"
        )
    return _factorize_small(d.small_matrix, d.kind)


def estimate_spectral_radius(sd: SpectralData) -> float:
    """Largest Ritz modulus of the masked operator."""
    if sd.eigenvalues.size == 0:
        raise ValueError("empty spectral data")
    return float(np.abs(sd.eigenvalues[0]))


def _check_katz_bound(f: ScalarFunction, rho: float, tolerances: Tolerances) -> None:
    if f.kind == RESOLVENT_MINUS_ONE and f.gamma * rho > tolerances.katz_safety:
        raise EvaluationError(
            f"resolvent parameter inadmissible: gamma*rho_hat = {f.gamma * rho:.6g} "
            f"> {tolerances.katz_safety}"
        )


def _realize(values: np.ndarray, tolerances: Tolerances) -> np.ndarray:
    real = values.real
    worst = float(np.max(np.abs(values.imag))) if values.size else 0.0
    limit = tolerances.imag * max(1.0, float(np.max(np.abs(real))) if real.size else 0.0)
    if worst > limit:
        raise EvaluationError(
            f"imaginary residue {worst:.3e} exceeds tolerance {limit:.3e}; "
            "complex Ritz pairs did not cancel"
        )
    return np.ascontiguousarray(real)


# -- evaluation paths --------------------------------------------------------


def evaluate_masked_function(
    g: SparseGraph,
    mask: SampleSet,
    f: ScalarFunction,
    seed: int = 0,
    tolerances: Tolerances = Tolerances(),
    max_steps: int | None = None,
    dense_cap: int = 4000,
) -> MatfunResult:
    """diag and rowsum of f(A_masked) from the sampled columns.

    Directed graphs take the Arnoldi spectral route and drop to the exact
    dense-core formula when that route is unusable; undirected graphs use
    symmetric Lanczos on the arrow-masked matrix.
    """
    if mask.kind != "column":
        raise ValueError("evaluate_masked_function expects a column mask")
    if not g.directed:
        return _evaluate_symmetric(g, mask, f, seed, tolerances, max_steps)
    return _evaluate_nonsymmetric(g, mask, f, seed, tolerances, max_steps, dense_cap)


def _evaluate_nonsymmetric(g, mask, f, seed, tolerances, max_steps, dense_cap):
    ell = len(mask)

    def fall_back(reason: str, cond: float | None) -> MatfunResult:
        result = direct_core_evaluation(g, mask, f, dense_cap=dense_cap)
        _check_katz_bound(f, result.spectral_radius_estimate, tolerances)
        return dataclasses.replace(
            result, seed=seed, fallback_reason=reason, condition_estimate=cond
        )

    d = arnoldi(g, mask, seed, max_steps, tolerances.breakdown)
    if not d.breakdown:
        return fall_back("no Arnoldi breakdown within the step cap", None)
    try:
        sd = spectral_factorize(d)
    except EvaluationError as exc:
        return fall_back(str(exc), None)

    rho = estimate_spectral_radius(sd)
    _check_katz_bound(f, rho, tolerances)
    if sd.condition_estimate > tolerances.cond_threshold:
        return fall_back("ill-conditioned eigenbasis of the small matrix", sd.condition_estimate)

    keep = np.abs(sd.eigenvalues) > tolerances.zero_eig * max(1.0, rho)
    kept = int(np.count_nonzero(keep))
    if kept != ell:
        return fall_back(
            f"{kept} nonvanishing Ritz values for {ell} sampled columns",
            sd.condition_estimate,
        )

    W = d.basis.astype(complex) @ sd.eigenvectors[:, keep]
    WJ = W[mask.indices, :]
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        cond_wj = float(np.linalg.cond(WJ))
    cond = max(sd.condition_estimate, cond_wj)
    if not np.isfinite(cond_wj) or cond_wj > tolerances.cond_threshold:
        return fall_back("sampled rows of the eigenvector block are singular", cond)

    lam = sd.eigenvalues[keep]
    flam = f.value(lam)
    lu = sla.lu_factor(WJ)

    # rowsum = W f(L) WJ^{-1} 1 (columns outside J vanish, f(0)=0)
    u = sla.lu_solve(lu, np.ones(ell, dtype=complex))
    rowsum_c = (W * flam[np.newaxis, :]) @ u

    # diag over J is the diagonal of (WJ f(L)) WJ^{-1}
    M = WJ * flam[np.newaxis, :]
    X = sla.lu_solve(lu, M.T, trans=1)
    diag_c = np.zeros(g.n, dtype=complex)
    diag_c[mask.indices] = np.diagonal(X)

    diag = _realize(diag_c, tolerances)
    rowsum = _realize(rowsum_c, tolerances)
    return MatfunResult(
        diag=diag,
        rowsum=rowsum,
        method="krylov_spectral",
        spectral_radius_estimate=rho,
        ell=ell,
        gamma=f.gamma,
        function=f.kind,
        seed=seed,
        steps=d.steps,
        condition_estimate=cond,
    )


def _evaluate_symmetric(g, mask, f, seed, tolerances, max_steps):
    d = lanczos(g, mask, seed, max_steps, tolerances.breakdown)
    sd = _factorize_small(d.small_matrix, d.kind)
    rho = estimate_spectral_radius(sd)
    _check_katz_bound(f, rho, tolerances)

    lam = sd.eigenvalues.real
    Q = sd.eigenvectors.real
    flam = f.value(lam)
    Y = d.basis @ Q
    rowsum = Y @ (flam * (Y.T @ np.ones(g.n)))
    diag = (Y * Y) @ flam
    return MatfunResult(
        diag=diag,
        rowsum=rowsum,
        method="lanczos",
        spectral_radius_estimate=rho,
        ell=len(mask),
        gamma=f.gamma,
        function=f.kind,
        seed=seed,
        steps=d.steps,
        condition_estimate=1.0,
        fallback_reason=None if d.breakdown else "no Lanczos breakdown within the step cap",
    )


def _core_blocks(g: SparseGraph, mask: SampleSet):
    """Dense leading core A[J, J] and the sparse trailing block A[rest, J]."""
    J = np.asarray(mask.indices, dtype=np.int64)
    rest = np.setdiff1d(np.arange(g.n), J, assume_unique=False)
    cols = g.csc[:, J].tocsr()
    a11 = cols[J, :].toarray()
    a21 = cols[rest, :]
    return J, rest, a11, a21


def direct_core_evaluation(
    g: SparseGraph,
    mask: SampleSet,
    f: ScalarFunction,
    dense_cap: int = 4000,
) -> MatfunResult:
    """Exact dense evaluation of the sampled-column structure.

    Only the sampled columns of f(A_masked) are nonzero, and in the leading
    block they equal f(A11) stacked on A21 @ g(A11) with g(t) = f(t)/t, so
    dense work on the ell-by-ell core gives diag and rowsum exactly (up to
    the dense exponential), for defective cores included.
    """
    if mask.kind != "column":
        raise ValueError("direct_core_evaluation expects a column mask")
    ell = len(mask)
    if ell > dense_cap:
        raise EvaluationError(f"core size {ell} exceeds the dense cap {dense_cap}")
    J, rest, a11, a21 = _core_blocks(g, mask)

    f11 = f.matrix_value(a11)
    g11 = f.matrix_quotient(a11).real

    diag = np.zeros(g.n)
    diag[J] = np.diagonal(f11)
    rowsum = np.zeros(g.n)
    rowsum[J] = f11 @ np.ones(ell)
    rowsum[rest] = a21 @ (g11 @ np.ones(ell))

    rho = float(np.max(np.abs(np.linalg.eigvals(a11)))) if ell else 0.0
    return MatfunResult(
        diag=diag,
        rowsum=rowsum,
        method="direct_core",
        spectral_radius_estimate=rho,
        ell=ell,
        gamma=f.gamma,
        function=f.kind,
    )


def _masked_function_columns(
    g: SparseGraph, mask: SampleSet, f: ScalarFunction
) -> np.ndarray:
    """Dense n-by-ell block of the nonzero columns of f(A_masked).

    Diagnostic helper for structure checks; memory is n * ell.
    """
    J, rest, a11, a21 = _core_blocks(g, mask)
    f11 = f.matrix_value(a11)
    g11 = f.matrix_quotient(a11).real
    out = np.zeros((g.n, len(mask)))
    out[J, :] = f11
    out[rest, :] = a21 @ g11
    return out


def transpose_measures(
    g: SparseGraph,
    rows: SampleSet,
    f: ScalarFunction,
    seed: int = 0,
    tolerances: Tolerances = Tolerances(),
    max_steps: int | None = None,
    dense_cap: int = 4000,
) -> MatfunResult:
    """diag and rowsum of f(A^T) computed from sampled rows of A."""
    if rows.kind != "row":
        raise ValueError("transpose_measures expects a row mask")
    as_columns = dataclasses.replace(rows, kind="column")
    return evaluate_masked_function(
        transpose(g), as_columns, f, seed, tolerances, max_steps, dense_cap
    )

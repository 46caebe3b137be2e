"""Sparse loading-space estimation: thresholded signal matrices,
cardinality-constrained sparse PCA with deflation, and cross-validated tuning
of the threshold and cardinality parameters."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .autocov import functional_threshold, lag_autocov
from .curves import CurvePanel, center_panel
from .estimator import (
    SignalMatrix,
    WeightSpec,
    _accumulate_signal_matrix,
    _factored_signal_matrix,
    _gram_inverse,
    estimate_rank,
    eigenvalue_ratios,
    make_projection,
    subspace_distance,
    sym_eigen,
)
from .exceptions import NumericalError
from .validation import as_panel, check_weight_kind

_ZERO_SNAP = 1e-12


@dataclass(frozen=True)
class SparsePcaConfig:
    """Configuration of the cardinality-constrained sparse PCA solver.

    Attributes
    ----------
    n_components : int
        Number of sparse components to extract.
    cardinality : int
        Maximum number of nonzero entries per component (column support), or
        maximum number of nonzero rows when ``support='row'``.
    deflation : {'schur', 'projection'}
        Matrix deflation applied between components.
    search : {'greedy', 'exhaustive'}
        Support search strategy; exhaustive enumerates all supports and is
        limited to matrices with at most 20 rows.
    support : {'column', 'row'}
        Per-column supports, or one support of whole rows shared by all
        components.
    """

    n_components: int
    cardinality: int
    deflation: str = "schur"
    search: str = "greedy"
    support: str = "column"

    def __post_init__(self):
        if self.n_components < 1:
            raise ValueError("n_components must be positive")
        if self.cardinality < 1:
            raise ValueError("cardinality must be at least 1")
        if self.deflation not in ("schur", "projection"):
            raise ValueError("deflation must be 'schur' or 'projection'")
        if self.search not in ("greedy", "exhaustive"):
            raise ValueError("search must be 'greedy' or 'exhaustive'")
        if self.support not in ("column", "row"):
            raise ValueError("support must be 'column' or 'row'")


@dataclass(frozen=True)
class CvConfig:
    """Fold layout and candidate grids for the cross-validation tuners.

    ``threshold_grid=None`` requests the default 20-point grid: zero followed
    by 19 log-spaced values up to the largest entrywise Hilbert-Schmidt norm.
    """

    folds: int = 5
    threshold_grid: Optional[Sequence[float]] = None
    cardinality_grid: Optional[Sequence[int]] = None

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("cross-validation needs at least two folds")
        for name, grid in (
            ("threshold_grid", self.threshold_grid),
            ("cardinality_grid", self.cardinality_grid),
        ):
            if grid is None:
                continue
            arr = np.asarray(grid, dtype=float)
            if arr.size == 0:
                raise ValueError(f"{name} must be non-empty")
            if np.any(arr < 0):
                raise ValueError(f"{name} must be nonnegative")
            if np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be strictly increasing")


def _deflate(M: np.ndarray, v: np.ndarray, method: str) -> np.ndarray:
    if method == "projection":
        proj = np.eye(M.shape[0]) - np.outer(v, v)
        out = proj @ M @ proj
    else:  # Schur complement
        Mv = M @ v
        denom = float(v @ Mv)
        if denom <= 1e-14 * max(np.trace(M), 1e-300):
            return M.copy()
        out = M - np.outer(Mv, Mv) / denom
    return (out + out.T) / 2.0


def _top_eigvec(H: np.ndarray) -> Tuple[float, np.ndarray]:
    values, vectors = np.linalg.eigh((H + H.T) / 2.0)
    return float(values[-1]), vectors[:, -1]


def _orthogonal_component(
    M: np.ndarray, support: np.ndarray, previous: List[np.ndarray]
) -> np.ndarray:
    """Unit vector on ``support`` maximizing v'Mv among vectors orthogonal to
    all previously extracted components.

    The eigenproblem is solved in explicit coordinates of the orthogonal
    complement, so the output is orthogonal to the previous components even
    when the restricted matrix is (numerically) zero.
    """
    sub = M[np.ix_(support, support)]
    if previous:
        U = np.column_stack([v[support] for v in previous])
        u_full, s, _ = np.linalg.svd(U, full_matrices=True)
        rank = int(np.sum(s > 1e-12 * max(s[0] if s.size else 0.0, 1e-300)))
        if rank >= support.size:
            raise NumericalError(
                "support too small to host another orthogonal component; "
                "increase the cardinality"
            )
        complement = u_full[:, rank:]
        _, y = _top_eigvec(complement.T @ sub @ complement)
        z = complement @ y
    else:
        _, z = _top_eigvec(sub)
    lead = np.argmax(np.abs(z))
    if z[lead] < 0:
        z = -z
    vec = np.zeros(M.shape[0])
    vec[support] = z
    vec[np.abs(vec) < _ZERO_SNAP * np.max(np.abs(vec))] = 0.0
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise NumericalError("sparse component collapsed to zero")
    return vec / norm


def _bordered_scores(M: np.ndarray, base: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Leading eigenvalue of M restricted to base + {candidate}, per candidate.

    Exact batched eigendecompositions for small supports; batched power
    iterations (valid because every matrix here is PSD) for larger ones,
    where only the ranking of the candidates matters.
    """
    s = base.size
    A = M[np.ix_(base, base)]
    B = M[np.ix_(base, candidates)]
    c = np.diag(M)[candidates]
    if s + 1 <= 12:
        bordered = np.empty((candidates.size, s + 1, s + 1))
        bordered[:, :s, :s] = A
        bordered[:, :s, s] = B.T
        bordered[:, s, :s] = B.T
        bordered[:, s, s] = c
        return np.linalg.eigvalsh(bordered)[:, -1]
    scale = 1.0 / np.sqrt(s + 1.0)
    X = np.full((s, candidates.size), scale)
    xi = np.full(candidates.size, scale)
    for _ in range(40):
        top = A @ X + B * xi[None, :]
        bot = np.sum(B * X, axis=0) + c * xi
        norm = np.sqrt(np.sum(top**2, axis=0) + bot**2)
        norm[norm == 0] = 1.0
        X = top / norm
        xi = bot / norm
    top = A @ X + B * xi[None, :]
    bot = np.sum(B * X, axis=0) + c * xi
    return np.sum(X * top, axis=0) + xi * bot


def _forward_chain(M: np.ndarray, start: int, size: int) -> List[int]:
    selected = [start]
    p = M.shape[0]
    while len(selected) < size:
        S = np.asarray(selected)
        candidates = np.setdiff1d(np.arange(p), S)
        scores = _bordered_scores(M, S, candidates)
        selected.append(int(candidates[int(np.argmax(scores))]))
    return selected


def _swap_refine(M: np.ndarray, selected: List[int], max_passes: int = 10) -> Tuple[List[int], float]:
    p = M.shape[0]
    current = float(np.linalg.eigvalsh(M[np.ix_(selected, selected)])[-1])
    for _ in range(max_passes):
        improved = False
        for pos in range(len(selected)):
            base = np.asarray(selected[:pos] + selected[pos + 1:], dtype=int)
            candidates = np.setdiff1d(np.arange(p), np.asarray(selected))
            if candidates.size == 0:
                return selected, current
            scores = _bordered_scores(M, base, candidates)
            best = int(np.argmax(scores))
            if scores[best] > current * (1 + 1e-12) + 1e-300:
                selected[pos] = int(candidates[best])
                current = float(scores[best])
                improved = True
        if not improved:
            break
    return selected, current


def _greedy_support(M: np.ndarray, cardinality: int) -> np.ndarray:
    """Support maximizing the leading eigenvalue of the principal submatrix.

    Greedy forward selection from a handful of deterministic starting
    indices (largest diagonal entry and the largest-magnitude entries of
    the leading eigenvector), each refined by single-swap exchanges; the
    best chain wins, ties to the earlier start.
    """
    p = M.shape[0]
    size = min(cardinality, p)
    if size == p:
        return np.arange(p)
    lead = np.linalg.eigh((M + M.T) / 2.0)[1][:, -1]
    n_extra = 3 if p <= 32 else 1
    starts: List[int] = [int(np.argmax(np.diag(M)))]
    for idx in np.argsort(-np.abs(lead))[:n_extra]:
        if int(idx) not in starts:
            starts.append(int(idx))
    best_support, best_value = None, -np.inf
    for start in starts:
        chain = _forward_chain(M, start, size)
        chain, value = _swap_refine(M, chain)
        if best_support is None or value > best_value * (1 + 1e-12) + 1e-300:
            best_support, best_value = chain, value
    return np.sort(np.asarray(best_support))


def _exhaustive_support(M: np.ndarray, cardinality: int) -> np.ndarray:
    p = M.shape[0]
    size = min(cardinality, p)
    best_support = None
    best_value = -np.inf
    for combo in itertools.combinations(range(p), size):
        idx = np.asarray(combo)
        value = float(np.linalg.eigvalsh(M[np.ix_(idx, idx)])[-1])
        if best_support is None or value > best_value:
            best_value = value
            best_support = idx
    return best_support


def _row_sparse_components(M: np.ndarray, config: SparsePcaConfig) -> np.ndarray:
    """Shared-row-support variant: greedily grow one set of rows maximizing
    the sum of the top-r eigenvalues of the principal submatrix."""
    p = M.shape[0]
    r = config.n_components
    size = min(config.cardinality, p)
    if size < r:
        raise ValueError("row cardinality must be at least n_components")

    def objective(idx):
        values = np.linalg.eigvalsh(M[np.ix_(idx, idx)])
        return float(np.sum(values[max(len(idx) - r, 0):]))

    if config.search == "exhaustive":
        best, best_value = None, -np.inf
        for combo in itertools.combinations(range(p), size):
            value = objective(np.asarray(combo))
            if best is None or value > best_value:
                best, best_value = np.asarray(combo), value
        support = best
    else:
        selected = [int(np.argmax(np.diag(M)))]
        while len(selected) < size:
            candidates = [i for i in range(p) if i not in selected]
            scores = [objective(np.asarray(selected + [i])) for i in candidates]
            selected.append(candidates[int(np.argmax(scores))])
        support = np.sort(np.asarray(selected))
    sub_values, sub_vectors = np.linalg.eigh(M[np.ix_(support, support)])
    K = np.zeros((p, r))
    K[support] = sub_vectors[:, ::-1][:, :r]
    for j in range(r):
        lead = np.argmax(np.abs(K[:, j]))
        if K[lead, j] < 0:
            K[:, j] = -K[:, j]
    return K


def sparse_pca(M, config: SparsePcaConfig) -> np.ndarray:
    """Cardinality-constrained sparse principal components of a PSD matrix.

    Maximizes <M, K K'> over matrices K with orthonormal columns and at most
    ``cardinality`` nonzeros per column (or nonzero rows, in row-support
    mode).  Components are extracted sequentially: a greedy forward search
    (or exhaustive enumeration) selects each support on the deflated matrix,
    the component is the leading eigenvector of the support submatrix
    restricted to the orthogonal complement of the previous components, and
    the matrix is then deflated.

    Returns an array of shape (p, n_components) satisfying both constraints.
    """
    arr = M.matrix if isinstance(M, SignalMatrix) else np.asarray(M, dtype=float)
    p = arr.shape[0]
    if arr.ndim != 2 or arr.shape[1] != p:
        raise ValueError("M must be a square matrix")
    if config.n_components > p:
        raise ValueError("n_components cannot exceed the matrix dimension")
    if config.cardinality > p:
        raise ValueError("cardinality cannot exceed the matrix dimension")
    if config.search == "exhaustive" and p > 20:
        raise ValueError("exhaustive search is limited to p <= 20")
    if config.support == "row":
        return _row_sparse_components(arr, config)

    work = (arr + arr.T) / 2.0
    components: List[np.ndarray] = []
    full_support = np.arange(p)
    for _ in range(config.n_components):
        if config.cardinality >= p:
            support = full_support
        elif config.search == "exhaustive":
            support = _exhaustive_support(work, config.cardinality)
        else:
            support = _greedy_support(work, config.cardinality)
        vec = _orthogonal_component(arr, support, components)
        components.append(vec)
        work = _deflate(work, vec, config.deflation)
    return np.column_stack(components)


def sparse_pca_objective(M, K: np.ndarray) -> float:
    """The sparse PCA objective <M, K K'> = tr(K' M K)."""
    arr = M.matrix if isinstance(M, SignalMatrix) else np.asarray(M, dtype=float)
    return float(np.trace(K.T @ arr @ K))


def thresholded_signal_matrix(
    panel: CurvePanel,
    max_lag: int,
    thresholds: Sequence[float],
    weight: WeightSpec,
) -> SignalMatrix:
    """Signal matrix assembled from hard-thresholded autocovariance kernels.

    ``thresholds`` holds one nonnegative level per lag 1..max_lag; the lag-0
    covariance entering the projected weight is never thresholded.  With all
    thresholds zero this equals :func:`signal_matrix` exactly.
    """
    levels = np.asarray(thresholds, dtype=float)
    if levels.shape != (max_lag,):
        raise ValueError(f"need exactly {max_lag} thresholds, one per lag")
    if np.any(levels < 0):
        raise ValueError("thresholds must be nonnegative")
    if max_lag < 1 or max_lag > panel.n_obs - 2:
        raise ValueError("max_lag must lie in [1, n_obs - 2]")
    acov0 = lag_autocov(panel, 0) if weight.kind == "projected" else None
    lags = (
        functional_threshold(lag_autocov(panel, k), levels[k - 1])
        for k in range(1, max_lag + 1)
    )
    return _accumulate_signal_matrix(lags, acov0, weight, max_lag, thresholded=True)


def _thresholded_signal_matrix_fast(
    values: np.ndarray, grid, max_lag: int, thresholds: Sequence[float],
    weight: WeightSpec,
) -> np.ndarray:
    """Projected-weight fast path of :func:`thresholded_signal_matrix`.

    Exploits W(v) = Q B(v)^{-1} Q' to contract masked kernels against the
    q-dimensional projection without materializing any (p, p, G, G) tensor;
    mathematically identical to the kernel-tensor assembly.
    """
    n, p, G = values.shape
    w = grid.quad_weights
    levels = np.asarray(thresholds, dtype=float)
    Q = make_projection(p, weight.proj_dim, weight.seed)
    q = Q.shape[1]
    centered = values - values.mean(axis=0)
    s_diag = np.einsum("tih,tjh->hij", centered, centered) / n
    s_diag = (s_diag + s_diag.transpose(0, 2, 1)) / 2.0
    inv_grams = np.stack([_gram_inverse(s, Q, weight.ridge) for s in s_diag])
    root = np.sqrt(w)
    M = np.zeros((p, p))
    for k in range(1, max_lag + 1):
        m = n - k
        lead, trail = centered[k:], centered[:m]
        norm_sq = _entrywise_hs_products(lead, trail, m, lead, trail, m, w)
        mask = np.sqrt(np.maximum(norm_sq, 0.0)) >= levels[k - 1]
        masked_proj = Q[None, :, :] * mask[:, :, None]          # (i, j, q)
        trail_w = trail * root[None, None, :]
        lead_w = lead * root[None, None, :]
        mixed = np.tensordot(trail_w, masked_proj, axes=([1], [1]))  # (t, h, i, q)
        mixed = np.ascontiguousarray(mixed.transpose(2, 0, 1, 3)).reshape(p, m, G * q)
        lead_b = np.ascontiguousarray(lead_w.transpose(1, 2, 0))     # (i, g, t)
        proj = np.matmul(lead_b, mixed) / m                          # (i, g, h*q)
        proj = proj.reshape(p, G, G, q)
        weighted = np.einsum("igha,hab->ighb", proj, inv_grams)
        M += weighted.reshape(p, -1) @ proj.reshape(p, -1).T
    return (M + M.T) / 2.0


def fold_blocks(n_obs: int, folds: int) -> List[np.ndarray]:
    """Partition {0..n_obs-1} into consecutive blocks of near-equal size."""
    if folds < 2 or folds > n_obs:
        raise ValueError("folds must lie in [2, n_obs]")
    return [blk for blk in np.array_split(np.arange(n_obs), folds)]


def _lagged_factors(values: np.ndarray, lag: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """Centered lead/trail segments whose outer products average to the
    lag-k autocovariance kernels."""
    centered = values - values.mean(axis=0)
    m = values.shape[0] - lag
    return centered[lag:], centered[:m], m


def _hs_gram(L_a, L_b, w):
    """Per-series weighted time-grams sum_g w_g L_a[t,i,g] L_b[s,i,g] -> (p, t, s)."""
    left = np.ascontiguousarray(L_a.transpose(1, 0, 2)) * w[None, None, :]
    right = np.ascontiguousarray(L_b.transpose(1, 2, 0))
    return np.matmul(left, right)


def _entrywise_hs_products(lead_a, trail_a, m_a, lead_b, trail_b, m_b, w):
    """Matrix of Hilbert-Schmidt inner products <A_ij, B_ij> between two
    factored autocovariances, for all entries (i, j) at once."""
    P = _hs_gram(lead_a, lead_b, w)
    R = _hs_gram(trail_a, trail_b, w)
    p = P.shape[0]
    flat = P.reshape(p, -1) @ R.reshape(p, -1).T
    return flat / (m_a * m_b)


def entrywise_hs_norms(panel: CurvePanel, lag: int) -> np.ndarray:
    """Entrywise HS norms of the lag-k autocovariance without materializing
    kernels; matches hs_norm_matrix(lag_autocov(panel, lag))."""
    lead, trail, m = _lagged_factors(np.asarray(panel.values), lag)
    w = panel.grid.quad_weights
    sq = _entrywise_hs_products(lead, trail, m, lead, trail, m, w)
    return np.sqrt(np.maximum(sq, 0.0))


def default_threshold_grid(panel: CurvePanel, lag: int, size: int = 20) -> np.ndarray:
    """Zero followed by log-spaced candidates up to the largest entrywise norm."""
    top = float(np.max(entrywise_hs_norms(panel, lag)))
    if top <= 0:
        return np.array([0.0])
    return np.concatenate([[0.0], np.geomspace(top * 1e-3, top, size - 1)])


def plugin_threshold(panel: CurvePanel, lag: int, multiplier: float = 2.0) -> float:
    """Threshold at the estimation-noise level of null autocovariance entries.

    A null entry (i, j) of the lag-k autocovariance has pointwise variance
    close to S0_ii(u,u) S0_jj(v,v) / (n - k), so its Hilbert-Schmidt norm
    concentrates near sqrt(s_i s_j / (n - k)) with s_i the integrated
    variance of series i.  The rule returns

        multiplier * median_i(s_i) * sqrt(log(p) / (n - lag)),

    the theoretical threshold rate with a robust plug-in scale.  Entries
    carrying signal sit far above this level whenever the loading structure
    is sparse.
    """
    if multiplier <= 0:
        raise ValueError("multiplier must be positive")
    if lag < 0 or lag >= panel.n_obs:
        raise ValueError("lag must lie in [0, n_obs)")
    values = np.asarray(panel.values)
    centered = values - values.mean(axis=0)
    integrated_var = np.einsum(
        "tig,g->i", centered**2, panel.grid.quad_weights
    ) / panel.n_obs
    scale = float(np.median(integrated_var))
    p = panel.n_series
    return multiplier * scale * float(np.sqrt(np.log(p) / (panel.n_obs - lag)))


def cv_threshold_curve(
    panel: CurvePanel, lag: int, config: CvConfig
) -> Tuple[np.ndarray, np.ndarray]:
    """Cross-validation score of every candidate threshold for one lag.

    Folds are consecutive blocks; for each fold the thresholded train
    autocovariance is compared to the raw validation autocovariance in the
    squared entrywise-HS Frobenius norm.  Returns (grid, mean scores).
    """
    values = np.asarray(panel.values)
    w = panel.grid.quad_weights
    blocks = fold_blocks(panel.n_obs, config.folds)
    if min(len(b) for b in blocks) <= lag:
        raise ValueError(
            f"every fold block must exceed the lag ({lag}); use fewer folds"
        )
    if config.threshold_grid is not None:
        grid = np.asarray(config.threshold_grid, dtype=float)
    else:
        grid = default_threshold_grid(panel, lag)
    scores = np.zeros(grid.size)
    for g, block in enumerate(blocks):
        train_idx = np.concatenate([b for i, b in enumerate(blocks) if i != g])
        lead_a, trail_a, m_a = _lagged_factors(values[train_idx], lag)
        lead_b, trail_b, m_b = _lagged_factors(values[block], lag)
        train_sq = _entrywise_hs_products(lead_a, trail_a, m_a, lead_a, trail_a, m_a, w)
        val_sq = _entrywise_hs_products(lead_b, trail_b, m_b, lead_b, trail_b, m_b, w)
        cross = _entrywise_hs_products(lead_a, trail_a, m_a, lead_b, trail_b, m_b, w)
        train_norm = np.sqrt(np.maximum(train_sq, 0.0))
        base = float(np.sum(val_sq))
        for idx, eta in enumerate(grid):
            kept = train_norm >= eta
            scores[idx] += base + float(np.sum((train_sq - 2.0 * cross)[kept]))
    return grid, scores / len(blocks)


def cv_threshold(panel: CurvePanel, lag: int, config: CvConfig) -> float:
    """Blockwise cross-validated threshold for one lag (ties to the smallest)."""
    grid, scores = cv_threshold_curve(panel, lag, config)
    return float(grid[int(np.argmin(scores))])


def cv_cardinality_curve(
    panel: CurvePanel,
    max_lag: int,
    thresholds: Sequence[float],
    n_factors: int,
    weight: WeightSpec,
    config: CvConfig,
) -> Tuple[np.ndarray, np.ndarray]:
    """Cross-validation score of every candidate cardinality.

    Each fold compares the sparse loading basis fitted on the thresholded
    train signal matrix against the ordinary eigenvector basis of the
    validation signal matrix, in subspace distance.  Returns (grid, scores).
    """
    if config.cardinality_grid is None:
        raise ValueError("cv_cardinality requires a cardinality_grid")
    grid = np.asarray(config.cardinality_grid, dtype=int)
    if np.any(grid < 1) or np.any(grid > panel.n_series):
        raise ValueError("cardinality candidates must lie in [1, n_series]")
    blocks = fold_blocks(panel.n_obs, config.folds)
    if min(len(b) for b in blocks) < max_lag + 2:
        raise ValueError(
            f"every validation block needs at least {max_lag + 2} observations"
        )
    values = np.asarray(panel.values)
    scores = np.zeros(grid.size)
    for g, block in enumerate(blocks):
        train_idx = np.concatenate([b for i, b in enumerate(blocks) if i != g])
        if weight.kind == "projected":
            M_train = SignalMatrix(
                _thresholded_signal_matrix_fast(
                    values[train_idx], panel.grid, max_lag, thresholds, weight
                ),
                max_lag=max_lag, weight=weight, thresholded=True,
            )
        else:
            train_panel = CurvePanel(values[train_idx], panel.grid)
            M_train = thresholded_signal_matrix(train_panel, max_lag, thresholds, weight)
        val_values = values[block]
        centered = val_values - val_values.mean(axis=0)
        M_val = _factored_signal_matrix(centered, panel.grid, max_lag, weight)
        K_val = sym_eigen(M_val)[1][:, :n_factors]
        for idx, c0 in enumerate(grid):
            K_train = sparse_pca(
                M_train,
                SparsePcaConfig(n_components=n_factors, cardinality=int(c0)),
            )
            scores[idx] += subspace_distance(K_train, K_val)
    return grid, scores / len(blocks)


def cv_cardinality(
    panel: CurvePanel,
    max_lag: int,
    thresholds: Sequence[float],
    n_factors: int,
    weight: WeightSpec,
    config: CvConfig,
) -> int:
    """Blockwise cross-validated cardinality (ties to the smallest)."""
    grid, scores = cv_cardinality_curve(
        panel, max_lag, thresholds, n_factors, weight, config
    )
    return int(grid[int(np.argmin(scores))])


class SparseFactorModel(BaseEstimator):
    """Sparse latent factor estimator: functional thresholding plus sparse PCA.

    Autocovariance entries with small Hilbert-Schmidt norm are zeroed before
    assembling the signal matrix, and the loading basis is constrained to at
    most ``cardinality`` nonzeros per column.  Both tuning parameters can be
    chosen by blockwise cross-validation.

    Parameters
    ----------
    max_lag, weight, proj_dim, ridge, n_factors, max_fraction, random_state
        As in :class:`FactorModel`.
    thresholds : sequence of float, float, 'cv', 'plugin', or None, default=None
        Per-lag thresholds (scalar is broadcast).  ``None`` or ``'cv'``
        selects each lag's threshold by cross-validation; ``'plugin'`` uses
        the null-noise-level rule of :func:`plugin_threshold`, which is far
        more robust when the entrywise signal-to-noise ratio is low.
    threshold_grid : sequence of float, optional
        Candidate thresholds for the CV search (default: 20-point log grid).
    cardinality : int, 'cv', or None, default=None
        Per-column sparsity budget; ``'cv'`` cross-validates over
        ``cardinality_grid``; ``None`` uses the full dimension (no sparsity).
    cardinality_grid : sequence of int, optional
        Candidates for the cardinality CV.
    cv_folds : int, default=5
    deflation : {'schur', 'projection'}, default='schur'
    search : {'greedy', 'exhaustive'}, default='greedy'
    support : {'column', 'row'}, default='column'

    Attributes
    ----------
    thresholds_ : ndarray of shape (max_lag,)
    cardinality_ : int
    signal_matrix_ : SignalMatrix
    eigenvalues_, ratios_, n_factors_, loadings_, mean_curves_, grid_
        As in :class:`FactorModel`; ``loadings_`` is column-sparse.
    """

    def __init__(
        self,
        max_lag: int = 4,
        weight: str = "projected",
        proj_dim: Optional[int] = None,
        ridge: float = 0.0,
        n_factors: Optional[int] = None,
        max_fraction: float = 0.75,
        thresholds=None,
        threshold_grid: Optional[Sequence[float]] = None,
        cardinality=None,
        cardinality_grid: Optional[Sequence[int]] = None,
        cv_folds: int = 5,
        deflation: str = "schur",
        search: str = "greedy",
        support: str = "column",
        random_state: int = 0,
    ):
        self.max_lag = max_lag
        self.weight = weight
        self.proj_dim = proj_dim
        self.ridge = ridge
        self.n_factors = n_factors
        self.max_fraction = max_fraction
        self.thresholds = thresholds
        self.threshold_grid = threshold_grid
        self.cardinality = cardinality
        self.cardinality_grid = cardinality_grid
        self.cv_folds = cv_folds
        self.deflation = deflation
        self.search = search
        self.support = support
        self.random_state = random_state

    def _weight_spec(self, n_series: int) -> WeightSpec:
        q = self.proj_dim if self.proj_dim is not None else min(12, n_series)
        return WeightSpec(
            kind=check_weight_kind(self.weight),
            proj_dim=q,
            seed=self.random_state,
            ridge=self.ridge,
        )

    def _resolve_thresholds(self, panel: CurvePanel) -> np.ndarray:
        if isinstance(self.thresholds, str):
            if self.thresholds == "cv":
                cv = CvConfig(folds=self.cv_folds, threshold_grid=self.threshold_grid)
                return np.array(
                    [cv_threshold(panel, k, cv) for k in range(1, self.max_lag + 1)]
                )
            if self.thresholds == "plugin":
                return np.array(
                    [plugin_threshold(panel, k) for k in range(1, self.max_lag + 1)]
                )
            raise ValueError("thresholds must be 'cv', 'plugin', or numeric")
        if self.thresholds is None:
            cv = CvConfig(folds=self.cv_folds, threshold_grid=self.threshold_grid)
            return np.array(
                [cv_threshold(panel, k, cv) for k in range(1, self.max_lag + 1)]
            )
        return np.broadcast_to(
            np.asarray(self.thresholds, dtype=float), (self.max_lag,)
        ).copy()

    def fit(self, X, y=None):
        panel = as_panel(X)
        spec = self._weight_spec(panel.n_series)
        levels = self._resolve_thresholds(panel)
        if spec.kind == "projected":
            M = SignalMatrix(
                _thresholded_signal_matrix_fast(
                    np.asarray(panel.values), panel.grid, self.max_lag, levels, spec
                ),
                max_lag=self.max_lag, weight=spec, thresholded=True,
            )
        else:
            M = thresholded_signal_matrix(panel, self.max_lag, levels, spec)
        values, vectors = sym_eigen(M)
        if self.n_factors is not None:
            if not 1 <= self.n_factors <= panel.n_series:
                raise ValueError("n_factors must lie in [1, n_series]")
            r = int(self.n_factors)
        else:
            r = estimate_rank(values, self.max_fraction)
        if self.cardinality == "cv":
            grid = self.cardinality_grid
            if grid is None:
                p = panel.n_series
                grid = sorted(
                    {max(r, int(np.ceil(p / 10))), int(np.ceil(p / 4)),
                     int(np.ceil(p / 2)), p}
                )
            c0 = cv_cardinality(
                panel, self.max_lag, levels, r, spec,
                CvConfig(folds=self.cv_folds, cardinality_grid=grid),
            )
        elif self.cardinality is None:
            c0 = panel.n_series
        else:
            c0 = int(self.cardinality)
        loadings = sparse_pca(
            M,
            SparsePcaConfig(
                n_components=r,
                cardinality=c0,
                deflation=self.deflation,
                search=self.search,
                support=self.support,
            ),
        )
        _, mean_curves = center_panel(panel)
        self.grid_ = panel.grid
        self.mean_curves_ = mean_curves
        self.weight_spec_ = spec
        self.thresholds_ = levels
        self.cardinality_ = c0
        self.signal_matrix_ = M
        self.eigenvalues_ = values
        self.ratios_ = eigenvalue_ratios(values)
        self.n_factors_ = r
        self.loadings_ = loadings
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "loadings_")
        panel = as_panel(X, self.grid_)
        centered = panel.values - self.mean_curves_[None, :, :]
        return np.einsum("pr,npg->nrg", self.loadings_, centered)

    def fit_transform(self, X, y=None) -> np.ndarray:
        return self.fit(X).transform(X)

    def inverse_transform(self, factor_curves: np.ndarray) -> np.ndarray:
        check_is_fitted(self, "loadings_")
        F = np.asarray(factor_curves, dtype=float)
        return np.einsum("pr,nrg->npg", self.loadings_, F) + self.mean_curves_

"""Grouping layer channels into modules from their influence maps.

The pipeline: smooth each map with a small box filter, binarize it at its
own percentile, then factor the stacked binary rows with nonnegative matrix
factorization (multiplicative updates) and read cluster assignments off the
coefficient matrix.  k-means on the same rows is kept as the comparison
method.  Stability of a clustering is probed by re-running it on
overlapping row subsets and scoring how consistently the overlap is
labeled, plus the cosine similarity of the matched templates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError
from .influence import EimStack
from .rng import Stream

_DIV_EPS = 1e-12  # denominator guard in multiplicative updates


# -- preprocessing -----------------------------------------------------------


def nearest_rank_threshold(values: np.ndarray, percentile: float) -> float:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    flat = np.sort(values.reshape(-1))
    n = flat.shape[0]
    rank = int(np.ceil(percentile / 100.0 * n))
    return float(flat[max(rank, 1) - 1])


def preprocess_maps(stack: EimStack, window: int = 3, percentile: float = 75.0) -> EimStack:
    """Box-smooth each map and binarize it at its own percentile.

    The filter replicates edge pixels; the threshold uses the nearest-rank
    percentile of the smoothed map with a strictly-greater comparison, so a
    constant map binarizes to all zeros.
    """
    if window < 1 or window % 2 == 0:
        raise ValidationError(f"window must be odd and positive, got {window}")
    if window > min(stack.height, stack.width):
        raise ValidationError(f"window {window} exceeds map size {stack.height}x{stack.width}")
    if not 0.0 < percentile <= 100.0:
        raise ValidationError(f"percentile must lie in (0, 100], got {percentile}")
    out = np.empty_like(stack.rows, dtype=np.float32)
    for i, row in enumerate(stack.maps()):
        smoothed = uniform_filter(row.astype(np.float64), size=window, mode="nearest")
        t = nearest_rank_threshold(smoothed, percentile)
        out[i] = (smoothed > t).reshape(-1).astype(np.float32)
    return EimStack(
        rows=out,
        layer=stack.layer,
        height=stack.height,
        width=stack.width,
        seed=stack.seed,
        n_pairs=stack.n_pairs,
        binary=True,
    )


# -- nonnegative matrix factorization ----------------------------------------


@dataclass
class NmfFit:
    w: np.ndarray  # (n, k)
    h: np.ndarray  # (k, p)
    errors: list[float]  # Frobenius error, initial plus one per iteration
    n_iter: int
    converged: bool


def nmf_fit(
    s: np.ndarray,
    rank: int,
    max_iter: int = 500,
    tol: float = 1e-5,
    seed: int = 0,
) -> NmfFit:
    """Multiplicative-update NMF minimizing the Frobenius error.

    W and H start uniform on (0, 1] (W drawn first, row-major), each sweep
    updates H then W, and iteration stops when the relative error drop
    falls below tol.  The recorded error sequence is nonincreasing.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2:
        raise ValidationError(f"nmf expects a matrix, got shape {s.shape}")
    if np.any(s < 0):
        raise ValidationError("nmf input must be nonnegative")
    n, p = s.shape
    if not 1 <= rank <= min(n, p):
        raise ValidationError(f"rank must lie in 1..{min(n, p)} for a {n}x{p} matrix, got {rank}")
    stream = Stream(seed).child("nmf-init")
    w = (1.0 - stream.units(n * rank)).reshape(n, rank)
    h = (1.0 - stream.units(rank * p)).reshape(rank, p)
    err = float(np.linalg.norm(s - w @ h))
    errors = [err]
    scale = max(err, _DIV_EPS)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        h *= (w.T @ s) / (w.T @ w @ h + _DIV_EPS)
        w *= (s @ h.T) / (w @ (h @ h.T) + _DIV_EPS)
        err = float(np.linalg.norm(s - w @ h))
        errors.append(err)
        if (errors[-2] - err) / scale < tol:
            converged = True
            break
    return NmfFit(w=w, h=h, errors=errors, n_iter=it, converged=converged)


def nmf(s: np.ndarray, rank: int, max_iter: int = 500, tol: float = 1e-5, seed: int = 0):
    """Factor s into (W, H); see nmf_fit for the full record."""
    fit = nmf_fit(s, rank, max_iter=max_iter, tol=tol, seed=seed)
    return fit.w, fit.h


# -- k-means -----------------------------------------------------------------


def _sq_dists(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def kmeans(
    x: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with k-means++ seeding; returns (centers, labels).

    An emptied cluster is re-seeded at the point farthest from its assigned
    center, which keeps k clusters alive on degenerate data.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in 1..{n}, got {k}")
    stream = Stream(seed).child("kmeans-init")
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[int(stream.random_unit() * n)]
    for j in range(1, k):
        d2 = _sq_dists(x, centers[:j]).min(axis=1)
        total = float(d2.sum())
        if total <= 0.0:
            centers[j] = x[int(stream.random_unit() * n)]
            continue
        cum = np.cumsum(d2) / total
        centers[j] = x[int(np.searchsorted(cum, stream.random_unit(), side="right"))]
    labels = np.zeros(n, dtype=np.int64)
    for it in range(max_iter):
        d2 = _sq_dists(x, centers)
        new_labels = d2.argmin(axis=1)
        dist_to_own = d2[np.arange(n), new_labels].copy()
        for j in range(k):
            if not np.any(new_labels == j):
                worst = int(np.argmax(dist_to_own))
                centers[j] = x[worst]
                new_labels[worst] = j
                dist_to_own[worst] = -1.0  # cannot be stolen by another empty cluster
        if it > 0 and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = x[labels == j]
            if members.shape[0]:
                centers[j] = members.mean(axis=0)
    return centers, labels


# -- cluster models ------------------------------------------------------------


@dataclass
class ClusterModel:
    """A fitted grouping of rows: scores to argmax over, plus templates."""

    method: str  # "nmf" | "kmeans"
    k: int
    scores: np.ndarray  # (n, k); row assignment = argmax
    templates: np.ndarray  # (k, p); NMF basis rows or k-means centers


def fit_clusters(
    rows: np.ndarray,
    k: int,
    method: str = "nmf",
    seed: int = 0,
    max_iter: int | None = None,
    tol: float = 1e-5,
) -> ClusterModel:
    rows = np.asarray(rows, dtype=np.float64)
    if method == "nmf":
        fit = nmf_fit(rows, k, max_iter=max_iter or 500, tol=tol, seed=seed)
        return ClusterModel(method="nmf", k=k, scores=fit.w, templates=fit.h)
    if method == "kmeans":
        centers, _ = kmeans(rows, k, seed=seed, max_iter=max_iter or 100)
        return ClusterModel(method="kmeans", k=k, scores=-_sq_dists(rows, centers), templates=centers)
    raise ValidationError(f"unknown clustering method {method!r}")


def assign_clusters(model: ClusterModel) -> np.ndarray:
    """Cluster index per row: argmax of the score row, ties to the lowest
    index.  Indices are 0-based."""
    return model.scores.argmax(axis=1).astype(np.int64)


# -- labeling comparison -------------------------------------------------------


def match_labelings(a: np.ndarray, b: np.ndarray, k: int | None = None) -> tuple[tuple[int, ...], float]:
    """Best relabeling of b onto a and the fraction of items that then agree.

    Tries every permutation up to k = 8 and solves an assignment problem on
    the k x k agreement matrix beyond that; both routes are exact.  Returns
    (perm, consistency) where perm[j] is the a-label matched to b-label j.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] == 0:
        raise ValidationError("match_labelings needs two equal-length nonempty label vectors")
    if a.min() < 0 or b.min() < 0:
        raise ValidationError("labels must be nonnegative")
    kk = int(max(a.max(), b.max()) + 1) if k is None else int(k)
    agree = np.zeros((kk, kk), dtype=np.int64)
    np.add.at(agree, (a, b), 1)
    n = a.shape[0]
    if kk <= 8:
        best_perm = None
        best = -1
        for perm in itertools.permutations(range(kk)):
            score = int(sum(agree[perm[j], j] for j in range(kk)))
            if score > best:
                best, best_perm = score, perm
        return tuple(best_perm), best / n
    rows, cols = linear_sum_assignment(agree, maximize=True)
    perm = [0] * kk
    for r, c in zip(rows, cols):
        perm[c] = int(r)
    return tuple(perm), int(agree[rows, cols].sum()) / n


# -- stability ------------------------------------------------------------------


@dataclass
class StabilityEntry:
    k: int
    consistency_mean: float
    consistency_std: float
    cosine_mean: float
    cosine_std: float


@dataclass
class StabilityReport:
    method: str
    reps: int
    entries: list[StabilityEntry]

    def entry(self, k: int) -> StabilityEntry:
        for e in self.entries:
            if e.k == k:
                return e
        raise KeyError(k)


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def _shuffled(stream: Stream, n: int) -> np.ndarray:
    idx = np.arange(n)
    for i in range(n - 1, 0, -1):  # Fisher-Yates over the stream
        j = int(stream.random_unit() * (i + 1))
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def stability_analysis(
    rows: np.ndarray,
    k_values: list[int],
    reps: int = 20,
    seed: int = 0,
    method: str = "nmf",
) -> StabilityReport:
    """Split rows into thirds, cluster (1 u 3) and (2 u 3), score subset 3.

    Each repetition reshuffles the rows with a derived seed, fits both runs,
    matches their labelings on the shared third, and records the matched
    agreement fraction plus the mean cosine between matched raw templates.
    Results aggregate over repetitions in a fixed order.
    """
    rows = np.asarray(rows, dtype=np.float64)
    n = rows.shape[0]
    if not k_values:
        raise ValidationError("k_values must not be empty")
    if n < 3 * max(k_values):
        raise ValidationError(f"stability needs at least 3*K rows; {n} rows for K={max(k_values)}")
    root = Stream(seed)
    entries = []
    for k in k_values:
        cons = np.empty(reps, dtype=np.float64)
        coss = np.empty(reps, dtype=np.float64)
        for r in range(reps):
            stream = root.child(f"stability:{k}:{r}")
            perm = _shuffled(stream, n)
            third = n // 3
            extra = n % 3
            sizes = [third + (1 if i < extra else 0) for i in range(3)]
            s1 = np.sort(perm[: sizes[0]])
            s2 = np.sort(perm[sizes[0] : sizes[0] + sizes[1]])
            s3 = np.sort(perm[sizes[0] + sizes[1] :])
            run_a = np.sort(np.concatenate([s1, s3]))
            run_b = np.sort(np.concatenate([s2, s3]))
            model_a = fit_clusters(rows[run_a], k, method=method, seed=stream.child_seed("fit:a"))
            model_b = fit_clusters(rows[run_b], k, method=method, seed=stream.child_seed("fit:b"))
            la = assign_clusters(model_a)[np.searchsorted(run_a, s3)]
            lb = assign_clusters(model_b)[np.searchsorted(run_b, s3)]
            mapping, consistency = match_labelings(la, lb, k=k)
            cons[r] = consistency
            coss[r] = float(
                np.mean([_cosine(model_a.templates[mapping[j]], model_b.templates[j]) for j in range(k)])
            )
        entries.append(
            StabilityEntry(
                k=k,
                consistency_mean=float(cons.mean()),
                consistency_std=float(cons.std()),
                cosine_mean=float(coss.mean()),
                cosine_std=float(coss.std()),
            )
        )
    return StabilityReport(method=method, reps=reps, entries=entries)

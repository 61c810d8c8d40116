"""X-means clustering of per-node probability mass vectors.

k-means with k-means++ seeding and Lloyd refinement, a BIC score under an
identical-spherical-Gaussian mixture, and the usual X-means outer loop:
refine all centers globally, then try to split every cluster in two and keep
each split whose local BIC improves, until nothing splits or ``k_max`` is
reached.  All randomness flows from one seeded generator, so results are
reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

EPS_VAR = 1e-12


@dataclass(frozen=True)
class XMeansConfig:
    k_min: int = 1
    k_max: int = 25
    max_iterations: int = 100
    convergence_tolerance: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError(f"need 1 <= k_min <= k_max, got {self.k_min}, {self.k_max}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tolerance > 0:
            raise ValueError("convergence_tolerance must be > 0")


class KMeansResult(NamedTuple):
    centers: np.ndarray
    assignment: np.ndarray
    wcss: float


@dataclass(frozen=True, eq=False)
class ClusterSet:
    centers: np.ndarray
    proportions: np.ndarray
    assignment: np.ndarray

    def __post_init__(self) -> None:
        if len(self.centers) != len(self.proportions) or len(self.centers) == 0:
            raise ValueError("need as many proportions as centers, and at least one")
        if np.any(self.proportions <= 0):
            raise ValueError("cluster proportions must be positive")
        if abs(self.proportions.sum() - 1.0) > 1e-9:
            raise ValueError("cluster proportions must sum to 1")

    @property
    def k(self) -> int:
        return len(self.centers)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, ClusterSet)
            and np.array_equal(self.centers, other.centers)
            and np.array_equal(self.proportions, other.proportions)
            and np.array_equal(self.assignment, other.assignment)
        )


def nearest(points: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the closest center (L2, lowest index on ties) and the squared distance."""
    d2 = cdist(points, centers, "sqeuclidean")
    a = np.argmin(d2, axis=1)
    return a, d2[np.arange(len(points)), a]


def _centroids(points: np.ndarray, assignment: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    counts = np.bincount(assignment, minlength=k)
    sums = np.stack([np.bincount(assignment, weights=points[:, j], minlength=k) for j in range(points.shape[1])], axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return sums / counts[:, None], counts


def kmeans_plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeds.  Stops early when every point coincides with a seed."""
    X = np.asarray(points, dtype=np.float64)
    n = len(X)
    idx = [int(rng.integers(n))]
    d2 = cdist(X, X[idx], "sqeuclidean")[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            break
        r = rng.random() * total
        j = int(np.searchsorted(np.cumsum(d2), r, side="right"))
        j = min(j, n - 1)
        idx.append(j)
        d2 = np.minimum(d2, cdist(X, X[j : j + 1], "sqeuclidean")[:, 0])
    return X[idx].copy()


def kmeans(
    points,
    k: int,
    seeds=None,
    config: XMeansConfig | None = None,
    history: list[float] | None = None,
) -> KMeansResult:
    """Lloyd's algorithm from the given seeds (k-means++ when ``seeds`` is None).

    An empty cluster is re-seeded at the point farthest from its center, once;
    if it empties again it is dropped, so fewer than ``k`` centers may come
    back.  ``history`` receives the WCSS after every assignment step.

    Raises:
        ValueError: ``k`` outside ``[1, len(points)]`` or seeds of the wrong shape.
    """
    config = config or XMeansConfig()
    X = np.asarray(points, dtype=np.float64)
    n = len(X)
    if k < 1 or k > n:
        raise ValueError(f"k={k} must lie in [1, {n}] (number of points)")
    if seeds is None:
        centers = kmeans_plusplus(X, k, np.random.default_rng(config.rng_seed))
    else:
        centers = np.array(seeds, dtype=np.float64)
        if centers.shape != (k, X.shape[1]):
            raise ValueError(f"seeds must have shape {(k, X.shape[1])}, got {centers.shape}")
    reseeded = np.zeros(len(centers), dtype=bool)

    for _ in range(config.max_iterations):
        assign, d2 = nearest(X, centers)
        if history is not None:
            history.append(float(d2.sum()))
        counts = np.bincount(assign, minlength=len(centers))
        empty = counts == 0
        if empty.any():
            fresh = empty & ~reseeded
            if fresh.any():
                far = np.argsort(-d2, kind="stable")[: int(fresh.sum())]
                centers[fresh] = X[far]
                reseeded[fresh] = True
            keep = ~(empty & ~fresh)
            centers, reseeded = centers[keep], reseeded[keep]
            continue
        new, _ = _centroids(X, assign, len(centers))
        shift = float(np.sqrt(((new - centers) ** 2).sum(axis=1)).max())
        centers = new
        if shift < config.convergence_tolerance:
            break

    assign, d2 = nearest(X, centers)
    counts = np.bincount(assign, minlength=len(centers))
    if np.any(counts == 0):
        live = counts > 0
        centers = centers[live]
        assign = (np.cumsum(live) - 1)[assign]
    wcss = float(d2.sum())
    if history is not None:
        history.append(wcss)
    return KMeansResult(centers, assign, wcss)


def bic_score(points, centers, assignment) -> float:
    """BIC of a hard clustering under a spherical Gaussian mixture, higher is better.

    The shared variance is the maximum-likelihood estimate ``WCSS / (n d)``,
    floored at ``EPS_VAR``; the model has ``k (d + 1)`` free parameters.
    Returns ``-inf`` when there are fewer points than clusters.
    """
    X = np.asarray(points, dtype=np.float64)
    C = np.asarray(centers, dtype=np.float64)
    a = np.asarray(assignment)
    n, d = X.shape
    k = len(C)
    if n == 0 or n < k:
        return float("-inf")
    wcss = float(((X - C[a]) ** 2).sum())
    var = max(wcss / (n * d), EPS_VAR)
    counts = np.bincount(a, minlength=k)
    counts = counts[counts > 0]
    loglik = float(np.sum(counts * np.log(counts / n))) - 0.5 * n * d * math.log(2 * math.pi * var) - wcss / (2 * var)
    return loglik - 0.5 * k * (d + 1) * math.log(n)


def assign_proportions(points, centers) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-center assignment and the empirical fraction of points per center."""
    X = np.asarray(points, dtype=np.float64)
    C = np.asarray(centers, dtype=np.float64)
    if len(C) == 0:
        raise ValueError("need at least one center")
    a, _ = nearest(X, C)
    return a, np.bincount(a, minlength=len(C)) / len(X)


def _renormalize(centers: np.ndarray) -> np.ndarray:
    c = np.clip(centers, 0.0, None)
    s = c.sum(axis=1, keepdims=True)
    return np.where(s > 0, c / np.where(s > 0, s, 1.0), c)


def xmeans(points, config: XMeansConfig | None = None, renormalize: bool = True) -> ClusterSet:
    """Cluster ``points`` choosing k by BIC-driven bisection.

    Starting from ``k_min`` centers, alternate global k-means refinement with
    trial 2-splits of every cluster; a split is kept iff the BIC of the two
    children on the parent's points beats the parent's.  When more splits
    qualify than ``k_max`` allows, the largest improvements win.  With
    ``renormalize`` the final centers are clipped and rescaled to sum to 1.

    Raises:
        ValueError: empty input or fewer points than ``k_min``.
    """
    config = config or XMeansConfig()
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("xmeans needs a non-empty 2-D point set")
    n = len(X)
    if n < config.k_min:
        raise ValueError(f"{n} points but k_min={config.k_min}")
    k_max = min(config.k_max, n)
    rng = np.random.default_rng(config.rng_seed)

    res = kmeans(X, config.k_min, kmeans_plusplus(X, config.k_min, rng) if config.k_min > 1 else X.mean(axis=0, keepdims=True), config)
    while len(res.centers) < k_max:
        splits = []
        for g in range(len(res.centers)):
            members = X[res.assignment == g]
            if len(members) < 2:
                continue
            parent = bic_score(members, members.mean(axis=0, keepdims=True), np.zeros(len(members), dtype=np.int64))
            seeds = kmeans_plusplus(members, 2, rng)
            if len(seeds) < 2:
                continue
            child = kmeans(members, 2, seeds, config)
            if len(child.centers) < 2:
                continue
            gain = bic_score(members, child.centers, child.assignment) - parent
            if gain > 0:
                splits.append((-gain, g, child.centers))
        if not splits:
            break
        splits.sort(key=lambda s: (s[0], s[1]))
        chosen = {g: c for _, g, c in splits[: k_max - len(res.centers)]}
        seeds = []
        for g, c in enumerate(res.centers):
            seeds.extend(chosen[g] if g in chosen else [c])
        before = len(res.centers)
        res = kmeans(X, len(seeds), np.array(seeds), config)
        if len(res.centers) <= before:
            break

    centers = _renormalize(res.centers) if renormalize else res.centers
    assignment, rho = assign_proportions(X, centers)
    if np.any(rho == 0):
        centers = centers[rho > 0]
        assignment, rho = assign_proportions(X, centers)
    return ClusterSet(centers, rho, assignment)

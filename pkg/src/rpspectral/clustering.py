"""K-means, agreement scoring, and a dense spectral reference pipeline.

The k-means here is deliberately plain Lloyd iteration with distance-weighted
seeding; every tie is broken toward the lower index so runs are reproducible
bit for bit. ARI is computed from the pair confusion counts in exact integer
arithmetic, which matters once pair counts pass 2**53.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KTooLarge, LengthMismatch, TooFewPoints, TooLarge
from .siamese import heat_kernel, pairwise_distances, select_bandwidth

_ORACLE_LIMIT = 2000  # dense eigendecomposition guard


@dataclass(frozen=True)
class KmeansConfig:
    k: int
    max_iterations: int = 300
    tolerance: float = 1e-6
    restarts: int = 10
    seed: int = 0

    def validate(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be nonnegative")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")


@dataclass
class KmeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float


def _squared_distances(points, centers):
    d2 = (
        (points * points).sum(axis=1)[:, None]
        + (centers * centers).sum(axis=1)[None, :]
        - 2.0 * points @ centers.T
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _seed_centers(points, k, rng):
    """Distance-weighted seeding: each new center is drawn with probability
    proportional to squared distance from the centers chosen so far."""
    n = len(points)
    chosen = [int(rng.integers(0, n))]
    d2 = _squared_distances(points, points[chosen])[:, 0]
    while len(chosen) < k:
        total = d2.sum()
        if total <= 0.0:
            # Every remaining point coincides with a chosen center; fall
            # back to the lowest index not already used.
            used = set(chosen)
            nxt = next(i for i in range(n) if i not in used)
        else:
            r = rng.random() * total
            nxt = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            nxt = min(nxt, n - 1)
        chosen.append(nxt)
        np.minimum(d2, _squared_distances(points, points[[nxt]])[:, 0], out=d2)
    return points[chosen].copy()


def _lloyd(points, k, centers, max_iterations, tolerance):
    n = len(points)
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iterations):
        d2 = _squared_distances(points, centers)
        labels = d2.argmin(axis=1)  # argmin ties go to the lower center

        new_centers = centers.copy()
        counts = np.bincount(labels, minlength=k)
        for c in range(k):
            if counts[c] > 0:
                new_centers[c] = points[labels == c].mean(axis=0)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            # Reseed each empty cluster from the point farthest from its
            # assigned center, never reusing a point within this pass.
            own = d2[np.arange(n), labels].copy()
            for c in empties:
                far = int(own.argmax())
                new_centers[c] = points[far]
                own[far] = -1.0

        movement = np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max()
        centers = new_centers
        if movement <= tolerance:
            break

    d2 = _squared_distances(points, centers)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(n), labels].sum())
    return labels, centers, inertia


def kmeans(points, config: KmeansConfig, rng=None):
    """Best of several seeded Lloyd runs, judged by within-cluster scatter."""
    config.validate()
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if config.k > n:
        raise KTooLarge(f"k={config.k} exceeds the {n} available points")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    best = None
    for _ in range(config.restarts):
        centers = _seed_centers(points, config.k, rng)
        labels, centers, inertia = _lloyd(
            points, config.k, centers, config.max_iterations, config.tolerance
        )
        if best is None or inertia < best.inertia:
            best = KmeansResult(labels=labels, centers=centers, inertia=inertia)
    return best


@dataclass(frozen=True)
class PairConfusion:
    """Unordered point pairs split by whether each labeling groups them.

    together_both: grouped by both labelings; together_first / together_second:
    grouped by only that labeling; together_neither: separated by both.
    All exact Python ints.
    """

    together_both: int
    together_first: int
    together_second: int
    together_neither: int

    @property
    def total(self) -> int:
        return (
            self.together_both
            + self.together_first
            + self.together_second
            + self.together_neither
        )


def pair_confusion(first, second) -> PairConfusion:
    """Count pair agreements between two labelings via the contingency table."""
    first = np.asarray(first).ravel()
    second = np.asarray(second).ravel()
    if len(first) != len(second):
        raise LengthMismatch(
            f"labelings have {len(first)} and {len(second)} points"
        )
    n = len(first)
    if n < 2:
        raise TooFewPoints("need at least 2 points to form a pair")

    _, fi = np.unique(first, return_inverse=True)
    _, si = np.unique(second, return_inverse=True)
    n_f = int(fi.max()) + 1
    n_s = int(si.max()) + 1
    table = np.zeros((n_f, n_s), dtype=np.int64)
    np.add.at(table, (fi, si), 1)

    def pairs_of(counts):
        return sum(int(c) * (int(c) - 1) // 2 for c in counts)

    both = pairs_of(table.ravel())
    same_first = pairs_of(table.sum(axis=1))
    same_second = pairs_of(table.sum(axis=0))
    total = n * (n - 1) // 2
    return PairConfusion(
        together_both=both,
        together_first=same_first - both,
        together_second=same_second - both,
        together_neither=total - same_first - same_second + both,
    )


def ari(first, second):
    """Adjusted Rand index from pair confusion counts.

    Returns None when the index is undefined (both labelings are constant or
    both split every pair), rather than guessing a value.
    """
    c = pair_confusion(first, second)
    n11, n10 = c.together_both, c.together_first
    n01, n00 = c.together_second, c.together_neither
    numerator = 2 * (n00 * n11 - n10 * n01)
    denominator = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11)
    if denominator == 0:
        return None
    return numerator / denominator


def spectral_oracle(X, n_clusters, bandwidth=None, seed=0):
    """Reference clustering by dense Laplacian eigenvectors.

    Builds the heat-kernel affinity on raw pairwise distances, takes the
    n_clusters smallest eigenvectors of the unnormalized Laplacian, and
    k-means them. Restricted to small inputs; exists to cross-check the
    trained pipeline, so it shares no training code with it.

    The default bandwidth is the median of all pairwise distances — a
    global scale. When clusters sit far apart that median is dominated by
    between-cluster distances and oversmooths the kernel, so pass a local
    scale (a median nearest-neighbor distance works well) explicitly in
    that situation.
    """
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if n > _ORACLE_LIMIT:
        raise TooLarge(
            f"reference pipeline is dense; {n} points exceed {_ORACLE_LIMIT}"
        )
    if n_clusters > n:
        raise KTooLarge(f"n_clusters={n_clusters} exceeds {n} points")

    distances = pairwise_distances(X)
    if bandwidth is None:
        off_diag = distances[np.triu_indices(n, k=1)]
        bandwidth = select_bandwidth(off_diag)
    affinity = heat_kernel(distances, bandwidth)
    laplacian = np.diag(affinity.sum(axis=1)) - affinity
    _, vectors = np.linalg.eigh(laplacian)
    embedding = vectors[:, :n_clusters]
    result = kmeans(embedding, KmeansConfig(k=n_clusters, seed=seed))
    return result.labels

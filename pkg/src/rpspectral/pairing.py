"""Mining positive/negative training pairs from k-nn graphs or tree leaves.

Pairs are unordered, deduplicated, and self-pair free. The raw directed count
(before merging) is kept alongside because it is the quantity the closed-form
storage estimates predict.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import KTooLarge
from .rptree import leaves

_EMPTY_PAIRS = np.empty((0, 2), dtype=np.int64)


@dataclass
class PairSet:
    """Positive and negative index pairs, each row (i, j) with i < j."""

    positives: np.ndarray
    negatives: np.ndarray
    source: str
    raw_positive_count: int
    warning: str | None = None

    def validate(self):
        """Raise ValueError when any pair-set invariant is broken."""
        for name, pairs in (("positives", self.positives), ("negatives", self.negatives)):
            if pairs.size and (pairs[:, 0] >= pairs[:, 1]).any():
                raise ValueError(f"{name} contain self-pairs or unnormalized rows")
            if len(np.unique(pairs, axis=0)) != len(pairs):
                raise ValueError(f"{name} contain duplicates")
        pos = {tuple(p) for p in self.positives.tolist()}
        neg = {tuple(p) for p in self.negatives.tolist()}
        if pos & neg:
            raise ValueError("a pair appears in both polarities")


@dataclass(frozen=True)
class PairCounts:
    positive_count: int
    negative_count: int

    @property
    def total_count(self):
        return self.positive_count + self.negative_count


def count_pairs(pairs: PairSet) -> PairCounts:
    """Exact deduplicated cardinalities of a pair set."""
    return PairCounts(len(pairs.positives), len(pairs.negatives))


def expected_pair_counts(n: int, k: int, leaf_size: int) -> dict:
    """Closed-form positive-pair estimates for both mining routes.

    The k-nn route needs n*k directed pairs; the tree route fills each of the
    ~n/leaf_size leaves with leaf_size^2 ordered pairs, i.e. n*leaf_size.
    Measured deduplicated counts sit below these estimates.
    """
    return {"knn_positive": n * k, "rptree_positive": n * leaf_size}


def knn_pairs(X, k, rng) -> PairSet:
    """Pairs from the exact k-nearest-neighbor graph.

    Each point contributes its k nearest Euclidean neighbors (brute force,
    distance ties broken toward the lower index) as positive pairs, and k
    uniform draws (without replacement) from the points it shares no positive
    pair with as negatives. The closure keeps the polarities disjoint even
    when neighborhoods are not mutual.
    """
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if not 1 <= k < n:
        raise KTooLarge(f"k={k} needs 1 <= k < n={n}")

    neighbor_lists = _knn_indices(X, k)
    directed = np.empty((n * k, 2), dtype=np.int64)
    directed[:, 0] = np.repeat(np.arange(n), k)
    directed[:, 1] = neighbor_lists.reshape(-1)
    positives = _unique_unordered(directed)

    partner = [set() for _ in range(n)]
    for i, j in positives.tolist():
        partner[i].add(j)
        partner[j].add(i)

    negative_rows = []
    mask = np.empty(n, dtype=bool)
    for i in range(n):
        mask[:] = True
        mask[i] = False
        mask[list(partner[i])] = False
        candidates = np.flatnonzero(mask)
        take = min(k, len(candidates))
        if take:
            chosen = rng.choice(candidates, size=take, replace=False)
            rows = np.empty((take, 2), dtype=np.int64)
            rows[:, 0] = i
            rows[:, 1] = chosen
            negative_rows.append(rows)
    negatives = (
        _unique_unordered(np.concatenate(negative_rows))
        if negative_rows
        else _EMPTY_PAIRS
    )
    return PairSet(
        positives=positives,
        negatives=negatives,
        source=f"knn:k={k}",
        raw_positive_count=n * k,
    )


def _knn_indices(X, k, chunk=512):
    """Row-chunked brute-force k-nn; returns an n x k neighbor index matrix."""
    n = len(X)
    sq_norms = (X**2).sum(axis=1)
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = X[start:stop]
        d2 = sq_norms[start:stop, None] + sq_norms[None, :] - 2.0 * (block @ X.T)
        np.maximum(d2, 0.0, out=d2)
        for r in range(stop - start):
            d2[r, start + r] = np.inf
        # Stable sort keeps the lower index first among exact distance ties.
        order = np.argsort(d2, axis=1, kind="stable")
        out[start:stop] = order[:, :k]
    return out


def rptree_pairs(tree, rng) -> PairSet:
    """Pairs from tree leaves.

    Positives are all within-leaf pairs. For negatives, every leaf picks one
    other leaf uniformly and contributes the full cross product. With a
    single leaf there is nothing to pair against; negatives come back empty
    with a warning attached.
    """
    leaf_sets = leaves(tree)
    positive_rows = []
    raw_count = 0
    for idx in leaf_sets:
        s = len(idx)
        raw_count += s * s  # ordered-with-self convention of the estimate
        if s >= 2:
            a, b = np.triu_indices(s, k=1)
            positive_rows.append(np.stack([idx[a], idx[b]], axis=1))
    positives = (
        _unique_unordered(np.concatenate(positive_rows))
        if positive_rows
        else _EMPTY_PAIRS
    )

    warning = None
    if len(leaf_sets) < 2:
        negatives = _EMPTY_PAIRS
        warning = "tree has a single leaf; no negative pairs generated"
    else:
        negative_rows = []
        for x, idx in enumerate(leaf_sets):
            other = int(rng.integers(0, len(leaf_sets) - 1))
            if other >= x:
                other += 1
            partner_idx = leaf_sets[other]
            grid_a, grid_b = np.meshgrid(idx, partner_idx, indexing="ij")
            negative_rows.append(
                np.stack([grid_a.reshape(-1), grid_b.reshape(-1)], axis=1)
            )
        negatives = _unique_unordered(np.concatenate(negative_rows))
    return PairSet(
        positives=positives,
        negatives=negatives,
        source="rptree",
        raw_positive_count=raw_count,
        warning=warning,
    )


def _unique_unordered(pairs):
    """Normalize rows to (min, max) and drop duplicates; sorted output."""
    if not len(pairs):
        return _EMPTY_PAIRS
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    return np.unique(np.stack([lo, hi], axis=1), axis=0)


def save_pairs_csv(pairs: PairSet, positives_path, negatives_path):
    """Write each polarity as a two-column CSV with an i,j header."""
    for path, rows in ((positives_path, pairs.positives), (negatives_path, pairs.negatives)):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j"])
            writer.writerows(rows.tolist())

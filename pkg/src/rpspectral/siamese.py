"""Contrastive twin network and distance-to-affinity conversion.

One shared-parameter network embeds both sides of every pair. Positive pairs
are pulled together (squared distance), negative pairs pushed past a margin
(hinge on the plain distance). Embedding distances then feed a heat kernel
whose bandwidth is the median positive-pair distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AllZeroDistances,
    BadSigma,
    EmptyPairSet,
    IndexOutOfRange,
    MissingPolarity,
    ShapeMismatch,
)
from .mlp import Adam, Mlp
from .serialize import read_json, write_json

_NORM_FLOOR = 1e-12  # guards the distance gradient at coincident embeddings


@dataclass(frozen=True)
class SiameseConfig:
    margin: float = 1.0
    epochs: int = 40
    batch_size: int = 128
    seed: int = 0
    hidden_sizes: tuple = (128, 128)
    embedding_dim: int = 32
    activation: str = "relu"
    learning_rate: float = 1e-3

    def validate(self):
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        if self.activation not in ("relu", "tanh", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.batch_size < 2:
            raise ValueError("batch_size must be at least 2")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")


def contrastive_loss(z1, z2, is_positive, margin=1.0):
    """Loss and gradients for one embedded pair.

    Positive pairs pay the squared distance; negative pairs pay
    max(margin - distance, 0), with subgradient 0 at the hinge and a floored
    norm at coincident points. Returns (loss, grad_z1, grad_z2).
    """
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    if z1.shape != z2.shape:
        raise ShapeMismatch(f"{z1.shape} vs {z2.shape}")
    diff = z1 - z2
    if is_positive:
        loss = float(diff @ diff)
        grad = 2.0 * diff
        return loss, grad, -grad
    distance = float(np.sqrt(diff @ diff))
    if distance >= margin:
        zero = np.zeros_like(diff)
        return 0.0, zero, zero.copy()
    grad = -diff / max(distance, _NORM_FLOOR)
    return margin - distance, grad, -grad


def _contrastive_batch(Z1, Z2, positive_mask, margin):
    """Mean loss over a pair batch and gradients of that mean wrt Z1, Z2."""
    diff = Z1 - Z2
    sq = (diff * diff).sum(axis=1)
    dist = np.sqrt(sq)
    m = len(Z1)

    losses = np.where(positive_mask, sq, np.maximum(margin - dist, 0.0))
    # d(mean)/dZ1: positive rows 2*diff/m, active negative rows -diff/(dist*m).
    coeff = np.where(
        positive_mask,
        2.0,
        np.where(dist < margin, -1.0 / np.maximum(dist, _NORM_FLOOR), 0.0),
    )
    G1 = diff * (coeff / m)[:, None]
    return float(losses.mean()), G1, -G1


def train_siamese(X, pairs, config: SiameseConfig, rng=None):
    """Train the shared twin on a pair set; returns (net, epoch_loss_history).

    Every mini-batch holds equal positive and negative counts; the smaller
    polarity is resampled with replacement each epoch so batches stay
    balanced even on heavily skewed pair sets. Deterministic given the seed.
    """
    config.validate()
    X = np.asarray(X, dtype=np.float64)
    n_pos = len(pairs.positives)
    n_neg = len(pairs.negatives)
    if n_pos + n_neg == 0:
        raise EmptyPairSet("no pairs to train on")
    if n_pos == 0 or n_neg == 0:
        missing = "positives" if n_pos == 0 else "negatives"
        raise MissingPolarity(f"pair set has no {missing}")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    sizes = [X.shape[1], *config.hidden_sizes, config.embedding_dim]
    net = Mlp.init(
        sizes, config.activation, seed=int(rng.integers(0, 2**63 - 1))
    )
    optimizer = Adam(net, learning_rate=config.learning_rate)

    half = config.batch_size // 2
    major = max(n_pos, n_neg)
    history = []
    for _ in range(config.epochs):
        pos_order = (
            rng.permutation(n_pos)
            if n_pos == major
            else rng.integers(0, n_pos, size=major)
        )
        neg_order = (
            rng.permutation(n_neg)
            if n_neg == major
            else rng.integers(0, n_neg, size=major)
        )
        batch_losses = []
        for start in range(0, major, half):
            pos_batch = pairs.positives[pos_order[start : start + half]]
            neg_batch = pairs.negatives[neg_order[start : start + half]]
            left = np.concatenate([pos_batch[:, 0], neg_batch[:, 0]])
            right = np.concatenate([pos_batch[:, 1], neg_batch[:, 1]])
            mask = np.zeros(len(left), dtype=bool)
            mask[: len(pos_batch)] = True

            Z1, cache1 = net.forward(X[left])
            Z2, cache2 = net.forward(X[right])
            loss, G1, G2 = _contrastive_batch(Z1, Z2, mask, config.margin)
            grads1, _ = net.backward(cache1, G1)
            grads2, _ = net.backward(cache2, G2)
            total = [
                (gw1 + gw2, gb1 + gb2)
                for (gw1, gb1), (gw2, gb2) in zip(grads1, grads2)
            ]
            optimizer.step(net, total)
            batch_losses.append(loss)
        history.append(float(np.mean(batch_losses)))
    return net, history


def siamese_distances(net, X, index_pairs):
    """Embedding-space Euclidean distance for each (i, j) pair."""
    X = np.asarray(X, dtype=np.float64)
    index_pairs = np.asarray(index_pairs, dtype=np.int64)
    if index_pairs.size and (
        index_pairs.min() < 0 or index_pairs.max() >= len(X)
    ):
        raise IndexOutOfRange(
            f"pair indices outside 0..{len(X) - 1}"
        )
    Z, _ = net.forward(X)
    diff = Z[index_pairs[:, 0]] - Z[index_pairs[:, 1]]
    return np.sqrt((diff * diff).sum(axis=1))


def select_bandwidth(distances):
    """Median heat-kernel bandwidth from a distance sample.

    Falls back to the smallest nonzero distance when the median is zero;
    raises AllZeroDistances when nothing nonzero exists to set a scale.
    """
    distances = np.asarray(distances, dtype=np.float64)
    if distances.size == 0:
        raise AllZeroDistances("empty distance sample")
    median = float(np.median(distances))
    if median > 0:
        return median
    nonzero = distances[distances > 0]
    if nonzero.size == 0:
        raise AllZeroDistances("all distances are zero")
    return float(nonzero.min())


def pairwise_distances(Z):
    """Dense symmetric Euclidean distance matrix with an exact zero diagonal."""
    Z = np.asarray(Z, dtype=np.float64)
    sq = (Z * Z).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (Z @ Z.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def heat_kernel(distances, bandwidth):
    """Affinities exp(-d^2 / (2 bandwidth^2)) with a zero diagonal.

    The exponent is negated so similarity decays with distance, which is what
    a similarity kernel must do.
    """
    if bandwidth <= 0:
        raise BadSigma(f"bandwidth must be positive, got {bandwidth}")
    distances = np.asarray(distances, dtype=np.float64)
    if distances.ndim != 2 or distances.shape[0] != distances.shape[1]:
        raise ShapeMismatch(f"distance matrix must be square, got {distances.shape}")
    A = np.exp(-(distances**2) / (2.0 * bandwidth**2))
    np.fill_diagonal(A, 0.0)
    return A


def save_twin_checkpoint(net, bandwidth, pair_source, path):
    """Network weights plus the frozen bandwidth and pair provenance tag."""
    write_json(
        path,
        {
            "network": net.to_dict(),
            "bandwidth": float(bandwidth),
            "pair_source": pair_source,
        },
    )


def load_twin_checkpoint(path):
    """Inverse of save_twin_checkpoint; returns (net, bandwidth, pair_source)."""
    doc = read_json(path)
    return Mlp.from_dict(doc["network"]), doc["bandwidth"], doc["pair_source"]

"""Spectral embedding network with batch orthogonalization.

The network maps points to a g-dimensional embedding trained to minimize the
graph Laplacian quadratic form over mini-batch affinities. Training alternates
two kinds of steps: orthogonalization steps refit a linear whitening map from
a Cholesky factor of the batch Gram matrix, and gradient steps update the
network weights through that frozen map.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadArchitecture, BatchTooSmall, ShapeMismatch, SingularGram
from .mlp import Adam, Mlp
from .serialize import read_json, write_json
from .siamese import heat_kernel, pairwise_distances

_ORTHO_TOL = 1e-6  # relative Frobenius tolerance on Y^T Y = m I


@dataclass(frozen=True)
class SpectralConfig:
    n_clusters: int
    batch_size: int = 64
    total_steps: int = 1024
    seed: int = 0
    hidden_sizes: tuple = (128, 128)
    activation: str = "relu"
    learning_rate: float = 1e-3
    learning_rate_schedule: str = "constant"  # or "cosine" (decay to zero)
    restarts: int = 1  # train this many nets, keep the lowest-loss one
    features: str = "raw"  # or "twin": body consumes the twin embedding
    jitter: float = 1e-6

    def validate(self):
        if self.n_clusters < 1:
            raise ValueError("n_clusters must be at least 1")
        if self.activation not in ("relu", "tanh", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.batch_size < self.n_clusters:
            raise ValueError(
                "batch_size must be at least n_clusters "
                f"({self.batch_size} < {self.n_clusters})"
            )
        if self.total_steps < 2 or self.total_steps % 2 != 0:
            raise ValueError("total_steps must be even and at least 2")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.learning_rate_schedule not in ("constant", "cosine"):
            raise ValueError(
                f"unknown learning_rate_schedule {self.learning_rate_schedule!r}"
            )
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.features not in ("raw", "twin"):
            raise ValueError(f"unknown features mode {self.features!r}")
        if self.jitter < 0:
            raise ValueError("jitter must be nonnegative")


@dataclass(frozen=True)
class OrthoMap:
    """Linear map that whitens the batch it was fitted on: Y^T Y = m I."""

    transform: np.ndarray  # (g, g)
    batch_size: int


def _whitening_map(gram, m, jitter):
    """sqrt(m) * L^-T from a Cholesky factor, jittering once if needed."""
    try:
        L = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        if jitter <= 0:
            raise SingularGram("batch Gram matrix is not positive definite")
        g = gram.shape[0]
        bump = jitter * np.trace(gram) / g
        try:
            L = np.linalg.cholesky(gram + bump * np.eye(g))
        except np.linalg.LinAlgError:
            raise SingularGram(
                "batch Gram matrix is singular even after jitter"
            ) from None
    identity = np.eye(gram.shape[0])
    return np.sqrt(m) * np.linalg.solve(L, identity).T


def ortho_residual(Y, m):
    """Frobenius distance of Y^T Y from m I."""
    G = Y.T @ Y
    return float(np.linalg.norm(G - m * np.eye(G.shape[0])))


def orthogonalize(Y_raw, jitter=1e-6):
    """Whiten a batch of raw outputs so the result satisfies Y^T Y = m I.

    Returns (Y_ortho, OrthoMap). A single whitening pass is refined with a
    second one when rounding (or the jitter itself) leaves the Gram residual
    above tolerance; batches whose outputs are genuinely rank-deficient
    cannot be whitened and raise SingularGram.
    """
    Y_raw = np.asarray(Y_raw, dtype=np.float64)
    m, g = Y_raw.shape
    if m < g:
        raise BatchTooSmall(
            f"need at least {g} points to orthogonalize {g} outputs, got {m}"
        )
    transform = _whitening_map(Y_raw.T @ Y_raw, m, jitter)
    Y = Y_raw @ transform
    if ortho_residual(Y, m) > _ORTHO_TOL * m:
        second = _whitening_map(Y.T @ Y, m, jitter)
        transform = transform @ second
        Y = Y_raw @ transform
        residual = ortho_residual(Y, m)
        if residual > _ORTHO_TOL * m:
            raise SingularGram(
                "batch outputs are rank-deficient; whitening residual "
                f"{residual:.3e} exceeds {_ORTHO_TOL * m:.3e}"
            )
    return Y, OrthoMap(transform=transform, batch_size=m)


def spectral_loss(affinity, Y):
    """Laplacian quadratic form (1/m^2) sum_ij a_ij ||y_i - y_j||^2.

    Computed in trace form with M = diag(row sums) - A:
    loss = (2/m^2) tr(Y^T M Y), gradient (4/m^2) M Y.
    Returns (loss, grad_Y).
    """
    affinity = np.asarray(affinity, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    m = Y.shape[0]
    if affinity.shape != (m, m):
        raise ShapeMismatch(
            f"affinity {affinity.shape} does not match batch of {m}"
        )
    MY = affinity.sum(axis=1)[:, None] * Y - affinity @ Y
    loss = max(float((Y * MY).sum()) * 2.0 / (m * m), 0.0)
    grad = (4.0 / (m * m)) * MY
    return loss, grad


@dataclass
class SpectralModel:
    net: Mlp
    ortho: OrthoMap
    final_batch: np.ndarray
    loss_history: list = field(default_factory=list)
    ortho_residuals: list = field(default_factory=list)
    config: SpectralConfig = None
    twin: Mlp = None  # frozen feature net, consulted when features="twin"
    selected_restart: int = 0


def _draw_batches(n, m, rng):
    """An orthogonalization batch and a gradient batch of m points each.

    The two are disjoint when the dataset is large enough to allow it;
    otherwise they are drawn independently.
    """
    if n >= 2 * m:
        order = rng.permutation(n)
        return order[:m], order[m : 2 * m]
    return (
        rng.choice(n, size=m, replace=False),
        rng.choice(n, size=m, replace=False),
    )


_SELECTION_TAIL = 10  # gradient losses averaged when ranking restarts


def train_spectralnet(X, twin_net, bandwidth, config: SpectralConfig, rng=None):
    """Alternating orthogonalization / gradient training.

    Affinities for each gradient batch come from the frozen twin network:
    embed the batch, take pairwise distances, apply the heat kernel at the
    supplied bandwidth. The whitening map is refitted on every
    orthogonalization step and held fixed through the following gradient
    step; a final refit after the last update keeps the stored map in sync
    with the trained weights.

    The body network consumes raw coordinates by default; with
    ``features="twin"`` it consumes the frozen twin's embedding instead
    (the affinity is built from twin distances either way).

    With ``restarts > 1``, that many nets train on generators seeded by
    consecutive 63-bit draws from ``rng``, and the one with the lowest mean
    over its last ten gradient losses wins (ties to the earliest). A single
    restart trains directly on ``rng``, so the default configuration draws
    exactly the same stream it always has. ``learning_rate_schedule="cosine"``
    decays the step size to zero across the run, which stops the optimizer
    from orbiting the solution it found.
    """
    config.validate()
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    m = config.batch_size
    if n < m:
        raise BatchTooSmall(f"dataset has {n} points, batch size is {m}")
    if rng is None:
        rng = np.random.default_rng(config.seed)

    # The twin net is frozen, so its embedding of the dataset never changes;
    # compute it once. For datasets small enough to hold an n x n matrix the
    # full affinity is also cached and gradient batches just slice it.
    Z_full, _ = twin_net.forward(X)
    features = Z_full if config.features == "twin" else X
    affinity_full = None
    if n * n <= 16_000_000:
        affinity_full = heat_kernel(pairwise_distances(Z_full), bandwidth)

    def batch_affinity(idx):
        if affinity_full is not None:
            return affinity_full[np.ix_(idx, idx)]
        return heat_kernel(pairwise_distances(Z_full[idx]), bandwidth)

    sizes = [features.shape[1], *config.hidden_sizes, config.n_clusters]
    half_steps = config.total_steps // 2

    def train_once(run_rng):
        net = Mlp.init(
            sizes, config.activation, seed=int(run_rng.integers(0, 2**63 - 1))
        )
        optimizer = Adam(net, learning_rate=config.learning_rate)
        loss_history = []
        ortho_residuals = []
        for step in range(half_steps):
            if config.learning_rate_schedule == "cosine":
                optimizer.learning_rate = (
                    config.learning_rate
                    * 0.5
                    * (1.0 + np.cos(np.pi * step / half_steps))
                )
            ortho_idx, grad_idx = _draw_batches(n, m, run_rng)

            # Orthogonalization step: refit the map on fresh points.
            Y_raw, _ = net.forward(features[ortho_idx])
            Y_ortho, ortho_map = orthogonalize(Y_raw, config.jitter)
            ortho_residuals.append(ortho_residual(Y_ortho, m))

            # Gradient step through the frozen map.
            out, cache = net.forward(features[grad_idx])
            Y = out @ ortho_map.transform
            loss, grad_Y = spectral_loss(batch_affinity(grad_idx), Y)
            grads, _ = net.backward(cache, grad_Y @ ortho_map.transform.T)
            optimizer.step(net, grads)
            loss_history.append(loss)

        # The last update left the stored map stale; refit it once more.
        final_idx, _ = _draw_batches(n, m, run_rng)
        Y_raw, _ = net.forward(features[final_idx])
        Y_ortho, ortho_map = orthogonalize(Y_raw, config.jitter)
        ortho_residuals.append(ortho_residual(Y_ortho, m))
        return net, ortho_map, final_idx, loss_history, ortho_residuals

    if config.restarts == 1:
        candidates = [train_once(rng)]
        selected = 0
    else:
        seeds = [
            int(rng.integers(0, 2**63 - 1)) for _ in range(config.restarts)
        ]
        candidates = [train_once(np.random.default_rng(s)) for s in seeds]
        tails = [
            float(np.mean(c[3][-_SELECTION_TAIL:])) for c in candidates
        ]
        selected = int(np.argmin(tails))

    net, ortho_map, final_idx, loss_history, ortho_residuals = candidates[
        selected
    ]
    return SpectralModel(
        net=net,
        ortho=ortho_map,
        final_batch=np.asarray(final_idx, dtype=np.int64),
        loss_history=loss_history,
        ortho_residuals=ortho_residuals,
        config=config,
        twin=twin_net,
        selected_restart=selected,
    )


def embed(model: SpectralModel, X):
    """Spectral embedding of arbitrary points through the stored map."""
    X = np.asarray(X, dtype=np.float64)
    if model.config is not None and model.config.features == "twin":
        if model.twin is None:
            raise BadArchitecture(
                "model embeds twin features but carries no twin network"
            )
        X, _ = model.twin.forward(X)
    out, _ = model.net.forward(X)
    return out @ model.ortho.transform


def save_spectral_checkpoint(model: SpectralModel, path):
    payload = {
        "network": model.net.to_dict(),
        "transform": model.ortho.transform.tolist(),
        "batch_size": model.ortho.batch_size,
        "final_batch": model.final_batch.tolist(),
        "loss_history": model.loss_history,
        "ortho_residuals": model.ortho_residuals,
        "selected_restart": model.selected_restart,
        "config": {
            "n_clusters": model.config.n_clusters,
            "batch_size": model.config.batch_size,
            "total_steps": model.config.total_steps,
            "seed": model.config.seed,
            "hidden_sizes": list(model.config.hidden_sizes),
            "activation": model.config.activation,
            "learning_rate": model.config.learning_rate,
            "learning_rate_schedule": model.config.learning_rate_schedule,
            "restarts": model.config.restarts,
            "features": model.config.features,
            "jitter": model.config.jitter,
        },
    }
    if model.config.features == "twin":
        # Twin-feature models cannot embed without the feature net; keep the
        # checkpoint self-contained by carrying it along.
        payload["twin"] = model.twin.to_dict()
    write_json(path, payload)


def load_spectral_checkpoint(path):
    payload = read_json(path)
    cfg = payload["config"]
    config = SpectralConfig(
        n_clusters=cfg["n_clusters"],
        batch_size=cfg["batch_size"],
        total_steps=cfg["total_steps"],
        seed=cfg["seed"],
        hidden_sizes=tuple(cfg["hidden_sizes"]),
        activation=cfg.get("activation", "relu"),
        learning_rate=cfg["learning_rate"],
        learning_rate_schedule=cfg.get("learning_rate_schedule", "constant"),
        restarts=cfg.get("restarts", 1),
        features=cfg.get("features", "raw"),
        jitter=cfg["jitter"],
    )
    return SpectralModel(
        net=Mlp.from_dict(payload["network"]),
        ortho=OrthoMap(
            transform=np.asarray(payload["transform"], dtype=np.float64),
            batch_size=payload["batch_size"],
        ),
        final_batch=np.asarray(payload["final_batch"], dtype=np.int64),
        loss_history=list(payload["loss_history"]),
        ortho_residuals=list(payload["ortho_residuals"]),
        config=config,
        twin=Mlp.from_dict(payload["twin"]) if "twin" in payload else None,
        selected_restart=payload.get("selected_restart", 0),
    )

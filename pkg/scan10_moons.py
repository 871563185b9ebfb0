"""Scratch: does tail loss rank run quality? (delete before finishing)"""
import json

import numpy as np

from rpspectral.datasets import SyntheticSpec, generate_synthetic
from rpspectral.harness import (
    MethodConfig,
    _stage_rng,
    _STAGE_PAIRS,
    _STAGE_SIAMESE,
    _STAGE_SPECTRAL,
    _STAGE_KMEANS,
    mine_pairs,
)
from rpspectral.siamese import SiameseConfig, train_siamese, siamese_distances, select_bandwidth, heat_kernel, pairwise_distances
from rpspectral.spectralnet import SpectralConfig, _draw_batches, orthogonalize, spectral_loss
from rpspectral.mlp import Mlp, Adam
from rpspectral.clustering import KmeansConfig, kmeans, ari


def train_and_embed(F, affinity_full, config, rng, lr0):
    n = F.shape[0]
    m = config.batch_size
    net = Mlp.init([F.shape[1], *config.hidden_sizes, config.n_clusters], config.activation, seed=int(rng.integers(0, 2**63 - 1)))
    optimizer = Adam(net, learning_rate=lr0)
    total = config.total_steps // 2
    losses = []
    for t in range(total):
        optimizer.learning_rate = lr0 * 0.5 * (1.0 + np.cos(np.pi * t / total))
        ortho_idx, grad_idx = _draw_batches(n, m, rng)
        Y_raw, _ = net.forward(F[ortho_idx])
        Y_ortho, ortho_map = orthogonalize(Y_raw, config.jitter)
        out, cache = net.forward(F[grad_idx])
        Y = out @ ortho_map.transform
        loss, grad_Y = spectral_loss(affinity_full[np.ix_(grad_idx, grad_idx)], Y)
        grads, _ = net.backward(cache, grad_Y @ ortho_map.transform.T)
        optimizer.step(net, grads)
        losses.append(loss)
    final_idx, _ = _draw_batches(n, m, rng)
    Y_raw, _ = net.forward(F[final_idx])
    _, ortho_map = orthogonalize(Y_raw, config.jitter)
    out, _ = net.forward(F)
    return out @ ortho_map.transform, float(np.mean(losses[-10:]))


def one_run(X, y, run_seed):
    pairs = mine_pairs(X, MethodConfig(kind="rptree", leaf_size=20, strategy="random"), _stage_rng(run_seed, _STAGE_PAIRS))
    twin_cfg = SiameseConfig(epochs=1, batch_size=128, hidden_sizes=(64, 64), embedding_dim=16, learning_rate=5e-4)
    twin, _ = train_siamese(X, pairs, twin_cfg, rng=_stage_rng(run_seed, _STAGE_SIAMESE))
    bandwidth = select_bandwidth(siamese_distances(twin, X, pairs.positives))
    Z, _ = twin.forward(X)
    affinity_full = heat_kernel(pairwise_distances(Z), bandwidth)
    sp_cfg = SpectralConfig(n_clusters=2, batch_size=300, total_steps=8192, hidden_sizes=(32, 32), activation="tanh", learning_rate=5e-4)
    Y, tail = train_and_embed(Z, affinity_full, sp_cfg, _stage_rng(run_seed, _STAGE_SPECTRAL), 5e-4)
    labels = kmeans(Y, KmeansConfig(k=2), rng=_stage_rng(run_seed, _STAGE_KMEANS)).labels
    return ari(y, labels), tail


def main():
    X, y = generate_synthetic(SyntheticSpec(kind="moons", n=300, noise=0.06, seed=7))
    rows = []
    for seed in range(20):
        a, tail = one_run(X, y, seed)
        rows.append((a, tail))
        print(json.dumps({"seed": seed, "ari": round(a, 3), "tail_loss": tail}), flush=True)
    aris = np.array([r[0] for r in rows])
    tails = np.array([r[1] for r in rows])
    order = np.argsort(tails)
    print("\nsorted by tail loss (best first):")
    for i in order:
        print(f"  loss={tails[i]:.3e}  ari={aris[i]:.3f}")
    print(f"\npearson(ari, tail) = {np.corrcoef(aris, tails)[0,1]:.3f}")
    ranks_a = np.argsort(np.argsort(-aris))
    ranks_t = np.argsort(np.argsort(tails))
    print(f"spearman(ari, -tail) = {np.corrcoef(ranks_a, ranks_t)[0,1]:.3f}")


if __name__ == "__main__":
    main()

"""Scratch: does lr decay in the spectral stage fix moons? (delete before finishing)"""
import json
import time

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
from rpspectral.spectralnet import (
    SpectralConfig,
    SpectralModel,
    _draw_batches,
    orthogonalize,
    ortho_residual,
    spectral_loss,
    embed,
)
from rpspectral.mlp import Mlp, Adam
from rpspectral.clustering import KmeansConfig, kmeans, ari


def train_decayed(X, twin_net, bandwidth, config, rng, lr0, schedule):
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    m = config.batch_size
    sizes = [X.shape[1], *config.hidden_sizes, config.n_clusters]
    net = Mlp.init(sizes, config.activation, seed=int(rng.integers(0, 2**63 - 1)))
    optimizer = Adam(net, learning_rate=lr0)
    Z_full, _ = twin_net.forward(X)
    affinity_full = heat_kernel(pairwise_distances(Z_full), bandwidth)
    total = config.total_steps // 2
    for t in range(total):
        if schedule == "cosine":
            optimizer.learning_rate = lr0 * 0.5 * (1.0 + np.cos(np.pi * t / total))
        elif schedule == "geometric":
            optimizer.learning_rate = lr0 * (0.01 ** (t / total))
        ortho_idx, grad_idx = _draw_batches(n, m, rng)
        Y_raw, _ = net.forward(X[ortho_idx])
        Y_ortho, ortho_map = orthogonalize(Y_raw, config.jitter)
        batch = X[grad_idx]
        affinity = affinity_full[np.ix_(grad_idx, grad_idx)]
        out, cache = net.forward(batch)
        Y = out @ ortho_map.transform
        loss, grad_Y = spectral_loss(affinity, Y)
        grads, _ = net.backward(cache, grad_Y @ ortho_map.transform.T)
        optimizer.step(net, grads)
    final_idx, _ = _draw_batches(n, m, rng)
    Y_raw, _ = net.forward(X[final_idx])
    Y_ortho, ortho_map = orthogonalize(Y_raw, config.jitter)
    return SpectralModel(net=net, ortho=ortho_map, final_batch=np.asarray(final_idx, dtype=np.int64), loss_history=[loss], ortho_residuals=[0.0], config=config)


def one_run(X, y, run_seed, m, steps, lr0, schedule):
    method = MethodConfig(kind="rptree", leaf_size=20, strategy="random")
    pairs = mine_pairs(X, method, _stage_rng(run_seed, _STAGE_PAIRS))
    twin_cfg = SiameseConfig(epochs=1, batch_size=128, hidden_sizes=(64, 64), embedding_dim=16, learning_rate=5e-4)
    twin, _ = train_siamese(X, pairs, twin_cfg, rng=_stage_rng(run_seed, _STAGE_SIAMESE))
    bandwidth = select_bandwidth(siamese_distances(twin, X, pairs.positives))
    sp_cfg = SpectralConfig(n_clusters=2, batch_size=m, total_steps=steps, hidden_sizes=(32, 32), activation="tanh", learning_rate=lr0)
    model = train_decayed(X, twin, bandwidth, sp_cfg, _stage_rng(run_seed, _STAGE_SPECTRAL), lr0, schedule)
    Y = embed(model, X)
    labels = kmeans(Y, KmeansConfig(k=2), rng=_stage_rng(run_seed, _STAGE_KMEANS)).labels
    return ari(y, labels)


def main():
    X, y = generate_synthetic(SyntheticSpec(kind="moons", n=300, noise=0.08, seed=7))
    cells = [
        dict(m=300, steps=8192, lr0=1e-3, schedule="cosine"),
        dict(m=300, steps=8192, lr0=3e-3, schedule="cosine"),
        dict(m=64, steps=8192, lr0=1e-3, schedule="cosine"),
        dict(m=300, steps=8192, lr0=1e-3, schedule="geometric"),
    ]
    results = []
    for cell in cells:
        t0 = time.time()
        aris = [one_run(X, y, seed, **cell) for seed in range(10)]
        rec = dict(cell, mean=float(np.mean(aris)), aris=[round(a, 3) for a in aris], secs=round(time.time() - t0, 1))
        results.append(rec)
        print(json.dumps(rec), flush=True)
    results.sort(key=lambda r: -r["mean"])
    print("\nTOP:")
    for rec in results[:3]:
        print(json.dumps(rec))


if __name__ == "__main__":
    main()

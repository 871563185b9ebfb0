"""Scratch: spectral net on twin codes vs raw coords, x noise. (delete before finishing)"""
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
    _draw_batches,
    orthogonalize,
    spectral_loss,
)
from rpspectral.mlp import Mlp, Adam
from rpspectral.clustering import KmeansConfig, kmeans, ari
from rpspectral.errors import SingularGram


def train_and_embed(F, affinity_full, config, rng, lr0, schedule):
    """F is whatever the body net consumes; affinity indexed alongside it."""
    n = F.shape[0]
    m = config.batch_size
    sizes = [F.shape[1], *config.hidden_sizes, config.n_clusters]
    net = Mlp.init(sizes, config.activation, seed=int(rng.integers(0, 2**63 - 1)))
    optimizer = Adam(net, learning_rate=lr0)
    total = config.total_steps // 2
    for t in range(total):
        if schedule == "cosine":
            optimizer.learning_rate = lr0 * 0.5 * (1.0 + np.cos(np.pi * t / total))
        ortho_idx, grad_idx = _draw_batches(n, m, rng)
        Y_raw, _ = net.forward(F[ortho_idx])
        Y_ortho, ortho_map = orthogonalize(Y_raw, config.jitter)
        out, cache = net.forward(F[grad_idx])
        Y = out @ ortho_map.transform
        loss, grad_Y = spectral_loss(affinity_full[np.ix_(grad_idx, grad_idx)], Y)
        grads, _ = net.backward(cache, grad_Y @ ortho_map.transform.T)
        optimizer.step(net, grads)
    final_idx, _ = _draw_batches(n, m, rng)
    Y_raw, _ = net.forward(F[final_idx])
    _, ortho_map = orthogonalize(Y_raw, config.jitter)
    out, _ = net.forward(F)
    return out @ ortho_map.transform


def one_run(X, y, run_seed, spec_input, m, steps, lr0, schedule, hidden, act):
    pairs = mine_pairs(X, MethodConfig(kind="rptree", leaf_size=20, strategy="random"), _stage_rng(run_seed, _STAGE_PAIRS))
    twin_cfg = SiameseConfig(epochs=1, batch_size=128, hidden_sizes=(64, 64), embedding_dim=16, learning_rate=5e-4)
    twin, _ = train_siamese(X, pairs, twin_cfg, rng=_stage_rng(run_seed, _STAGE_SIAMESE))
    bandwidth = select_bandwidth(siamese_distances(twin, X, pairs.positives))
    Z, _ = twin.forward(X)
    affinity_full = heat_kernel(pairwise_distances(Z), bandwidth)
    F = Z if spec_input == "twin" else X
    sp_cfg = SpectralConfig(n_clusters=2, batch_size=m, total_steps=steps, hidden_sizes=hidden, activation=act, learning_rate=lr0)
    try:
        Y = train_and_embed(F, affinity_full, sp_cfg, _stage_rng(run_seed, _STAGE_SPECTRAL), lr0, schedule)
    except SingularGram:
        return None
    labels = kmeans(Y, KmeansConfig(k=2), rng=_stage_rng(run_seed, _STAGE_KMEANS)).labels
    return ari(y, labels)


def main():
    cells = [
        dict(noise=0.06, spec_input="twin"),
        dict(noise=0.08, spec_input="twin"),
        dict(noise=0.06, spec_input="raw"),
        dict(noise=0.08, spec_input="raw"),
    ]
    fixed = dict(m=300, steps=8192, lr0=1e-3, schedule="cosine", hidden=(32, 32), act="tanh")
    results = []
    for cell in cells:
        X, y = generate_synthetic(SyntheticSpec(kind="moons", n=300, noise=cell["noise"], seed=7))
        t0 = time.time()
        aris = [one_run(X, y, seed, cell["spec_input"], **fixed) for seed in range(10)]
        ok = [a for a in aris if a is not None]
        rec = dict(
            cell,
            mean=float(np.mean(ok)) if ok else None,
            failed=len(aris) - len(ok),
            aris=[round(a, 3) if a is not None else None for a in aris],
            secs=round(time.time() - t0, 1),
        )
        results.append(rec)
        print(json.dumps(rec), flush=True)
    results.sort(key=lambda r: -(r["mean"] or -1))
    print("\nTOP:")
    for rec in results[:2]:
        print(json.dumps(rec))


if __name__ == "__main__":
    main()

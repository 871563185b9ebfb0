import itertools
import json
import time

import numpy as np

import rpspectral as rp

spec = rp.SyntheticSpec(kind="moons", n=300, noise=0.05, seed=7)
X, y = rp.generate_synthetic(spec)
tree = rp.MethodConfig(kind="rptree", leaf_size=20, strategy="random")

results = []
for ep, lr_sp, steps, hid in itertools.product(
    (2, 4), (1e-3, 2e-3), (8192, 16384), ((16, 16), (32, 32))
):
    sia = rp.SiameseConfig(epochs=ep, learning_rate=5e-4,
                           hidden_sizes=(64, 64), embedding_dim=16)
    sp = rp.SpectralConfig(n_clusters=2, batch_size=300, total_steps=steps,
                           hidden_sizes=hid, learning_rate=lr_sp)
    config = rp.ExperimentConfig(dataset=spec, method=tree, n_clusters=2,
                                 runs=10, siamese=sia, spectral=sp)
    t0 = time.perf_counter()
    record = rp.run_experiment(config, data=(X, y))
    aris = [r.get("ari") for r in record["runs"]]
    ok = [a for a in aris if a is not None]
    cell = dict(ep=ep, lr_sp=lr_sp, steps=steps, hid=list(hid),
                mean=float(np.mean(ok)) if ok else None,
                aris=[None if a is None else round(a, 3) for a in aris],
                secs=round(time.perf_counter() - t0, 1))
    results.append(cell)
    print(json.dumps(cell), flush=True)

results.sort(key=lambda c: -(c["mean"] or -1))
print("\nTOP 5:")
for c in results[:5]:
    print(json.dumps(c))

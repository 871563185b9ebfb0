import json
import time

import numpy as np

import rpspectral as rp

spec = rp.SyntheticSpec(kind="moons", n=300, noise=0.08, seed=7)
X, y = rp.generate_synthetic(spec)
tree = rp.MethodConfig(kind="rptree", leaf_size=20, strategy="random")

CELLS = [
    dict(twin_lr=1e-3, m=64, steps=8192, lr_sp=1e-3),
    dict(twin_lr=1e-3, m=128, steps=8192, lr_sp=1e-3),
    dict(twin_lr=1e-3, m=300, steps=8192, lr_sp=1e-3),
    dict(twin_lr=5e-4, m=64, steps=8192, lr_sp=1e-3),
    dict(twin_lr=5e-4, m=128, steps=16384, lr_sp=1e-3),
]

results = []
for c in CELLS:
    sia = rp.SiameseConfig(epochs=2, learning_rate=c["twin_lr"],
                           hidden_sizes=(64, 64), embedding_dim=16)
    sp = rp.SpectralConfig(n_clusters=2, batch_size=c["m"],
                           total_steps=c["steps"],
                           hidden_sizes=(32, 32), activation="tanh",
                           learning_rate=c["lr_sp"])
    config = rp.ExperimentConfig(dataset=spec, method=tree, n_clusters=2,
                                 runs=10, siamese=sia, spectral=sp)
    t0 = time.perf_counter()
    record = rp.run_experiment(config, data=(X, y))
    aris = [r.get("ari") for r in record["runs"]]
    ok = [a for a in aris if a is not None]
    cell = dict(**c, mean=float(np.mean(ok)) if ok else None,
                aris=[None if a is None else round(a, 3) for a in aris],
                secs=round(time.perf_counter() - t0, 1))
    results.append(cell)
    print(json.dumps(cell), flush=True)

results.sort(key=lambda x: -(x["mean"] or -1))
print("\nTOP:")
for c in results[:3]:
    print(json.dumps(c))

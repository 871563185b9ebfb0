import json
import time

import numpy as np

import rpspectral as rp

spec = rp.SyntheticSpec(kind="moons", n=300, noise=0.05, seed=7)
X, y = rp.generate_synthetic(spec)
tree = rp.MethodConfig(kind="rptree", leaf_size=20, strategy="random")

CELLS = [
    dict(lr_sp=3e-4, steps=16384, hid=(32, 32)),
    dict(lr_sp=3e-4, steps=32768, hid=(32, 32)),
    dict(lr_sp=2e-4, steps=32768, hid=(32, 32)),
    dict(lr_sp=5e-4, steps=16384, hid=(32, 32)),
    dict(lr_sp=1e-3, steps=8192, hid=(128, 128)),
]

results = []
for cell_spec in CELLS:
    sia = rp.SiameseConfig(epochs=2, learning_rate=5e-4,
                           hidden_sizes=(64, 64), embedding_dim=16)
    sp = rp.SpectralConfig(n_clusters=2, batch_size=300,
                           total_steps=cell_spec["steps"],
                           hidden_sizes=cell_spec["hid"],
                           activation="tanh",
                           learning_rate=cell_spec["lr_sp"])
    config = rp.ExperimentConfig(dataset=spec, method=tree, n_clusters=2,
                                 runs=10, siamese=sia, spectral=sp)
    t0 = time.perf_counter()
    record = rp.run_experiment(config, data=(X, y))
    aris = [r.get("ari") for r in record["runs"]]
    ok = [a for a in aris if a is not None]
    cell = dict(**{k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in cell_spec.items()},
                mean=float(np.mean(ok)) if ok else None,
                aris=[None if a is None else round(a, 3) for a in aris],
                secs=round(time.perf_counter() - t0, 1))
    results.append(cell)
    print(json.dumps(cell), flush=True)

results.sort(key=lambda c: -(c["mean"] or -1))
print("\nTOP:")
for c in results[:3]:
    print(json.dumps(c))

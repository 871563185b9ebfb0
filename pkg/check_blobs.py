import json
import time

import numpy as np

import rpspectral as rp

spec = rp.SyntheticSpec(kind="blobs", n=300, noise=0.05, centers=3, seed=7)
X, y = rp.generate_synthetic(spec)

for strategy in ("random", "bestof:3", "pca"):
    tree = rp.MethodConfig(kind="rptree", leaf_size=20, strategy=strategy)
    config = rp.ExperimentConfig(dataset=spec, method=tree, n_clusters=3, runs=10)
    t0 = time.perf_counter()
    record = rp.run_experiment(config, data=(X, y))
    aris = [r.get("ari") for r in record["runs"]]
    ok = [a for a in aris if a is not None]
    print(json.dumps(dict(strategy=strategy,
                          mean=float(np.mean(ok)) if ok else None,
                          aris=[None if a is None else round(a, 3) for a in aris],
                          secs=round(time.perf_counter() - t0, 1))), flush=True)

labels = rp.spectral_oracle(X, 3)
print("oracle ari:", rp.ari(y, labels))

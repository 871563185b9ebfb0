"""Scratch: dress rehearsal of the acceptance moons arms via the public API. (delete)"""
import json
import time

import rpspectral as rp


def moons_config(strategy):
    return rp.ExperimentConfig(
        dataset=rp.SyntheticSpec(kind="moons", n=300, noise=0.06, seed=7),
        method=rp.MethodConfig(kind="rptree", leaf_size=20, strategy=strategy),
        n_clusters=2,
        runs=10,
        base_seed=0,
        siamese=rp.SiameseConfig(
            epochs=1,
            batch_size=128,
            hidden_sizes=(64, 64),
            embedding_dim=16,
            learning_rate=5e-4,
        ),
        spectral=rp.SpectralConfig(
            n_clusters=2,
            batch_size=300,
            total_steps=8192,
            hidden_sizes=(32, 32),
            activation="tanh",
            learning_rate=5e-4,
            learning_rate_schedule="cosine",
            restarts=4,
            features="twin",
        ),
    )


for strategy in ("random", "bestof:3", "pca"):
    t0 = time.time()
    result = rp.run_experiment(moons_config(strategy))
    s = result["summary"]
    aris = [round(r["ari"], 3) for r in result["runs"] if "ari" in r]
    print(
        json.dumps(
            {
                "strategy": strategy,
                "mean": s["mean_ari"],
                "std": s["std_ari"],
                "aris": aris,
                "failed": s["runs_failed"],
                "secs": round(time.time() - t0, 1),
            }
        ),
        flush=True,
    )

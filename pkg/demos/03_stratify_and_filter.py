"""
Stratifying scores
==================

1-D k-means over scores, dispersion pruning, and selecting one stratum.
"""
import numpy as np

from cirs.stratify import ThresholdSet, filter_dataset, manifest, stratify

rng = np.random.default_rng(2023)
scores = np.concatenate([rng.normal(m, 0.02, 100) for m in (0.2, 0.5, 0.8)])
pairs = [(f"r{i}", float(s)) for i, s in enumerate(scores)]

model, labels = stratify(pairs, k=3, seed=7)
print("centroids", np.round(model.centroids, 4), "sizes", model.sizes())
print("objective per iteration", np.round(model.objective_history, 5))

# a loose fourth group: tight modes lower down, uniform scores above
tight = np.concatenate([rng.normal(m, 0.02, 100) for m in (0.1, 0.3, 0.5)])
loose = rng.uniform(0.65, 0.95, 30)
pairs = [(f"r{i}", float(s)) for i, s in enumerate(np.concatenate([tight, loose]))]
j = ThresholdSet(0.0, 0.05)
model, labels = stratify(pairs, k=4, thresholds=j)
print("dispersion", np.round(model.dispersion, 4), "retained", model.retained)
info = manifest(model, labels, k=4, seed=0, thresholds=j, init="quantile")
print({name: s["count"] for name, s in info["strata"].items()}, "kept", info["kept"], "pruned", info["pruned"])

# keep the middle stratum of the retained three
records = [{"id": a.id, "cirs": {"score": a.score}, "stratum": a.stratum} for a in labels]
kept, finfo = filter_dataset(records, "medium")
print(len(kept), "kept;", finfo["strata"])

"""Threshold-pruned 1-D k-means over CIRS scores, strata labels and dataset filters."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NAMED_STRATA = ("low", "medium", "high")
PRUNED = "pruned"


class StratifyError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdSet:
    """Closed interval of admissible per-cluster dispersions."""

    min: float = 0.0
    max: float = math.inf

    def __post_init__(self):
        if not (0 <= self.min <= self.max):
            raise ValueError(f"threshold set needs 0 <= min <= max, got [{self.min}, {self.max}]")

    def __contains__(self, value: float) -> bool:
        return self.min <= value <= self.max

    def to_list(self) -> list:
        return [self.min, None if math.isinf(self.max) else self.max]


def auto_thresholds(scores: Sequence[float], p_lo: float, p_hi: float) -> ThresholdSet:
    """Threshold set from percentiles of the scores' absolute deviations from their median.

    Deviations share units with cluster dispersion, so the resulting interval
    can be compared against it directly.
    """
    x = np.asarray(scores, dtype=float)
    dev = np.abs(x - np.median(x))
    lo, hi = np.percentile(dev, [p_lo, p_hi])
    return ThresholdSet(float(lo), float(hi))


@dataclass
class ClusterModel:
    centroids: list[float]
    ids: list
    labels: np.ndarray  # cluster index per record, aligned with ids
    dispersion: list[float]
    retained: list[bool]
    iterations: int = 0
    converged: bool = False
    objective_history: list[float] = field(default_factory=list)
    removed_in_loop: int = 0

    @property
    def k(self) -> int:
        return len(self.centroids)

    @property
    def assignments(self) -> dict:
        return dict(zip(self.ids, (int(i) for i in self.labels)))

    def sizes(self) -> list[int]:
        return np.bincount(self.labels, minlength=self.k).tolist()


def objective(x: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    """Sum of squared distances to assigned centroids."""
    return float(np.sum((x - centroids[labels]) ** 2))


def _assign(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # argmin takes the first minimum: ties go to the lower centroid index
    return np.argmin(np.abs(x[:, None] - centroids[None, :]), axis=1)


def _recenter(x: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cluster means; empty clusters are reseeded at the point farthest from its centroid."""
    k = len(centroids)
    labels = labels.copy()
    while True:
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if not len(empty):
            break
        sums = np.bincount(labels, weights=x, minlength=k)
        means = np.where(counts > 0, sums / np.maximum(counts, 1), centroids)
        dist = np.abs(x - means[labels])
        # only take points from clusters that can spare one
        dist[counts[labels] < 2] = -1.0
        far = int(np.argmax(dist))
        labels[far] = empty[0]
        centroids = means.copy()
        centroids[empty[0]] = x[far]
    sums = np.bincount(labels, weights=x, minlength=k)
    counts = np.bincount(labels, minlength=k)
    return sums / counts, labels


def _dispersion(x: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    k = len(centroids)
    counts = np.bincount(labels, minlength=k)
    total = np.bincount(labels, weights=np.abs(x - centroids[labels]), minlength=k)
    return total / np.maximum(counts, 1)


def _initial(x: np.ndarray, k: int, init: str, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if init == "quantile":
        q = (np.arange(k) + 0.5) / k
        centroids = np.quantile(x, q)
        return centroids, _assign(x, centroids)
    if init == "random":
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, k, size=len(x))
        return np.zeros(k), labels
    raise ValueError(f"unknown init mode {init!r}; expected 'quantile' or 'random'")


def kmeans_1d(
    scores: Sequence[tuple[object, float]],
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    init: str = "quantile",
    prune_within: ThresholdSet | None = None,
) -> ClusterModel:
    """Lloyd's algorithm on scalar scores.

    With ``prune_within`` set, clusters whose mean absolute distance to their
    centroid falls outside the threshold set are dropped at the end of every
    iteration and their points reassigned among the survivors on the next one.
    Without it, every cluster is returned as retained; see
    :func:`prune_clusters` for the single post-convergence prune.
    """
    if k < 1:
        raise StratifyError("K must be >= 1")
    if max_iters < 1:
        raise StratifyError("max_iters must be >= 1")
    ids = [i for i, _ in scores]
    x = np.asarray([s for _, s in scores], dtype=float)
    distinct = len(np.unique(x))
    if distinct < k:
        raise StratifyError(f"need at least K={k} distinct scores, got {distinct}")

    centroids, labels = _initial(x, k, init, seed)
    centroids, labels = _recenter(x, labels, centroids)
    history = [objective(x, labels, centroids)]
    removed = 0
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        new_labels = _assign(x, centroids)
        changed = not np.array_equal(new_labels, labels)
        centroids, labels = _recenter(x, new_labels, centroids)
        history.append(objective(x, labels, centroids))
        dropped = False
        if prune_within is not None:
            disp = _dispersion(x, labels, centroids)
            keep = np.array([d in prune_within for d in disp])
            if not keep.any():
                raise StratifyError("every cluster was removed; widen the threshold set")
            if not keep.all():
                removed += int((~keep).sum())
                centroids = centroids[keep]
                labels = _assign(x, centroids)
                centroids, labels = _recenter(x, labels, centroids)
                dropped = True
        if not changed and not dropped:
            converged = True
            break

    order = np.argsort(centroids, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    centroids = centroids[order]
    labels = rank[labels]
    disp = _dispersion(x, labels, centroids)
    return ClusterModel(
        centroids=centroids.tolist(),
        ids=ids,
        labels=labels,
        dispersion=disp.tolist(),
        retained=[True] * len(centroids),
        iterations=it,
        converged=converged,
        objective_history=history,
        removed_in_loop=removed,
    )


def prune_clusters(model: ClusterModel, thresholds: ThresholdSet) -> ClusterModel:
    retained = [d in thresholds for d in model.dispersion]
    if not any(retained):
        raise StratifyError(
            f"all {model.k} clusters pruned by J=[{thresholds.min}, {thresholds.max}]; widen the threshold set"
        )
    model.retained = retained
    return model


def strata_names(model: ClusterModel) -> list[str]:
    """Name per cluster index, in ascending centroid order among retained clusters."""
    kept = [i for i, r in enumerate(model.retained) if r]
    names = list(NAMED_STRATA) if len(kept) == 3 else [f"s{j}" for j in range(len(kept))]
    out = [PRUNED] * model.k
    for name, i in zip(names, kept):
        out[i] = name
    return out


@dataclass(frozen=True)
class StratumAssignment:
    id: object
    stratum: str
    cluster: int
    score: float


def label_strata(model: ClusterModel, scores: Sequence[float] | None = None) -> list[StratumAssignment]:
    names = strata_names(model)
    if scores is None:
        scores = [math.nan] * len(model.ids)
    return [
        StratumAssignment(rid, names[int(c)], int(c), float(s))
        for rid, c, s in zip(model.ids, model.labels, scores)
    ]


def stratify(
    scores: Sequence[tuple[object, float]],
    k: int = 3,
    thresholds: ThresholdSet | None = None,
    seed: int = 0,
    max_iters: int = 100,
    init: str = "quantile",
    prune_each_iter: bool = False,
) -> tuple[ClusterModel, list[StratumAssignment]]:
    """Cluster, prune and label in one call."""
    thresholds = thresholds or ThresholdSet()
    model = kmeans_1d(scores, k, seed=seed, max_iters=max_iters, init=init,
                      prune_within=thresholds if prune_each_iter else None)
    prune_clusters(model, thresholds)
    return model, label_strata(model, [s for _, s in scores])


def manifest(
    model: ClusterModel,
    assignments: Sequence[StratumAssignment],
    *,
    k: int,
    seed: int,
    thresholds: ThresholdSet,
    init: str,
    prune_each_iter: bool = False,
    config: dict | None = None,
) -> dict:
    names = strata_names(model)
    sizes = model.sizes()
    strata = {}
    for i, name in enumerate(names):
        key = name if name != PRUNED else f"{PRUNED}_{i}"
        strata[key] = {
            "centroid": round(model.centroids[i], 9),
            "dispersion": round(model.dispersion[i], 9),
            "count": sizes[i],
            "retained": model.retained[i],
        }
    pruned = sum(1 for a in assignments if a.stratum == PRUNED)
    out = {
        "input": len(assignments),
        "kept": len(assignments) - pruned,
        "pruned": pruned,
        "strata": strata,
        "seed": seed,
        "K": k,
        "J": thresholds.to_list(),
        "init": init,
        "prune_each_iter": prune_each_iter,
        "iterations": model.iterations,
        "converged": model.converged,
    }
    if config is not None:
        out["config"] = config
    return out


@dataclass(frozen=True)
class Interval:
    """Half-open score interval ``[lo, hi)``."""

    lo: float
    hi: float

    def __contains__(self, value: float) -> bool:
        return self.lo <= value < self.hi


_INTERVAL = re.compile(r"^\s*\[?\s*([-+0-9.eE]+|-?inf)\s*[,:]\s*([-+0-9.eE]+|inf)\s*\)?\s*$")


def parse_keep(selector: str) -> str | Interval:
    """``"medium"`` selects a stratum; ``"[0.2,0.6)"`` or ``"0.2:0.6"`` an interval."""
    m = _INTERVAL.match(selector)
    if m:
        lo, hi = float(m.group(1)), float(m.group(2))
        if lo > hi:
            raise ValueError(f"empty interval {selector!r}")
        return Interval(lo, hi)
    name = selector.strip()
    if not name:
        raise ValueError("empty keep selector")
    return name


def filter_dataset(records: Iterable[dict], keep: str | Interval) -> tuple[list[dict], dict]:
    """Keep records by stratum label (``record["stratum"]``) or by ``cirs.score`` interval."""
    records = list(records)
    counts: dict[str, int] = {}
    for rec in records:
        label = rec.get("stratum")
        if label is not None:
            counts[label] = counts.get(label, 0) + 1

    if isinstance(keep, Interval):
        def match(rec):
            try:
                return rec["cirs"]["score"] in keep
            except (KeyError, TypeError):
                raise StratifyError(f"record {rec.get('id')!r} has no cirs.score") from None
        selector = {"interval": [keep.lo, keep.hi]}
    else:
        available = sorted(n for n in counts if n != PRUNED)
        if keep not in available:
            raise StratifyError(f"unknown stratum {keep!r}; available: {', '.join(available) or 'none'}")

        def match(rec):
            return rec.get("stratum") == keep
        selector = {"stratum": keep}

    kept = [rec for rec in records if match(rec)]
    info = {
        "input": len(records),
        "kept": len(kept),
        "dropped": len(records) - len(kept),
        "pruned": counts.get(PRUNED, 0),
        "strata": dict(sorted(counts.items())),
        "keep": selector,
    }
    return kept, info

"""Corpus statistics, structural score and the combined CIRS score.

Scoring a corpus is two passes: analyze every record and accumulate feature
statistics, then z-normalize each record's AST features against those
statistics.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .frontend import (
    AstSummary,
    ParseError,
    parse_source,
    source_unit,
    summarize_ast,
    tokenize,
    validate_syntax,
)
from .logical import LogicalMetrics, logical_metrics, sigmoid

FEATURES = ("node_count", "distinct_kinds", "depth")
PRECISION = 9
# emitted values of open-interval scores stay inside the interval after rounding
_OPEN_LO = 10.0**-PRECISION
_OPEN_HI = 1.0 - 10.0**-PRECISION


class EmptyCorpusError(ValueError):
    """No valid records to compute statistics from."""


@dataclass(frozen=True)
class FeatureStats:
    mean: float
    std: float


@dataclass(frozen=True)
class CorpusStats:
    """Per-feature mean and population standard deviation.

    Accumulated stats keep exact integer moments so that merging partial
    results is exact.  Stats loaded from JSON carry only mean/std and cannot
    be merged.
    """

    count: int
    features: dict[str, FeatureStats]
    sums: tuple[int, ...] | None = field(default=None, repr=False, compare=False)
    sumsqs: tuple[int, ...] | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_moments(cls, count: int, sums: Sequence[int], sumsqs: Sequence[int]) -> "CorpusStats":
        if count < 1:
            raise EmptyCorpusError("statistics need at least one summary")
        feats = {}
        for name, s, sq in zip(FEATURES, sums, sumsqs):
            # n*sum(x^2) - sum(x)^2 is exact in integers and zero iff all values agree
            var_num = count * sq - s * s
            feats[name] = FeatureStats(s / count, math.sqrt(var_num) / count)
        return cls(count, feats, tuple(sums), tuple(sumsqs))

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        if self.sums is None or other.sums is None:
            raise ValueError("stats loaded from JSON cannot be merged")
        return CorpusStats.from_moments(
            self.count + other.count,
            [a + b for a, b in zip(self.sums, other.sums)],
            [a + b for a, b in zip(self.sumsqs, other.sumsqs)],
        )

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "features": {
                name: {"mean": self.features[name].mean, "std": self.features[name].std}
                for name in FEATURES
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusStats":
        try:
            count = int(data["count"])
            feats = {
                name: FeatureStats(float(data["features"][name]["mean"]), float(data["features"][name]["std"]))
                for name in FEATURES
            }
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed stats JSON: missing {exc}") from exc
        if count < 1 or any(f.std < 0 for f in feats.values()):
            raise ValueError("malformed stats JSON: count must be >= 1 and std >= 0")
        return cls(count, feats)

    @classmethod
    def load(cls, path) -> "CorpusStats":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def accumulate_stats(summaries: Iterable[AstSummary]) -> CorpusStats:
    count = 0
    sums = [0, 0, 0]
    sumsqs = [0, 0, 0]
    for summary in summaries:
        count += 1
        for i, x in enumerate(summary.as_tuple()):
            sums[i] += x
            sumsqs[i] += x * x
    if count == 0:
        raise EmptyCorpusError("cannot accumulate statistics over an empty stream")
    return CorpusStats.from_moments(count, sums, sumsqs)


def zscores(summary: AstSummary, stats: CorpusStats) -> tuple[float, float, float]:
    out = []
    for name, x in zip(FEATURES, summary.as_tuple()):
        f = stats.features[name]
        out.append(0.0 if f.std == 0 else (x - f.mean) / f.std)
    return tuple(out)


def structural_score(summary: AstSummary, stats: CorpusStats) -> float:
    z = zscores(summary, stats)
    return sigmoid(sum(z) / len(z))


def cirs(structural: float, logical: float) -> float:
    return structural * logical


@dataclass(frozen=True)
class Analysis:
    """Corpus-independent facts about one valid snippet."""

    summary: AstSummary
    metrics: LogicalMetrics


@dataclass(frozen=True)
class CirsScore:
    structural: float
    logical: float
    score: float
    features: AstSummary
    metrics: LogicalMetrics

    def to_dict(self) -> dict:
        r = PRECISION
        return {
            "structural": round(min(max(self.structural, _OPEN_LO), _OPEN_HI), r),
            "logical": round(min(self.logical, _OPEN_HI), r),
            "score": round(min(max(self.score, _OPEN_LO), _OPEN_HI), r),
            "node_count": self.features.node_count,
            "distinct_kinds": self.features.distinct_kinds,
            "depth": self.features.depth,
            "difficulty": round(self.metrics.difficulty, r),
            "cyclomatic": self.metrics.cyclomatic,
        }


def analyze(code: str) -> Analysis:
    """Parse and measure one snippet that is already known to be valid."""
    tree = parse_source(code)
    return Analysis(summarize_ast(tree), logical_metrics(tokenize(code), tree))


def score_analysis(analysis: Analysis, stats: CorpusStats) -> CirsScore:
    s = structural_score(analysis.summary, stats)
    return CirsScore(s, analysis.metrics.logical_score, cirs(s, analysis.metrics.logical_score),
                     analysis.summary, analysis.metrics)


def score_source(code: str, stats: CorpusStats) -> CirsScore:
    return score_analysis(analyze(code), stats)


def _check(code) -> Analysis | str:
    """Analysis of ``code`` or a rejection reason."""
    if not isinstance(code, str) or not code.strip():
        return "empty or missing code"
    report = validate_syntax(code)
    if not report.valid:
        d = report.diagnostics[0]
        return f"syntax error at line {d.line}, column {d.column}: {d.message}"
    try:
        return analyze(code)
    except ParseError as exc:
        return str(exc)


@dataclass
class ScoredCorpus:
    scored: list[tuple[dict, CirsScore]]
    rejected: list[tuple[dict, str]]
    stats: CorpusStats

    def scored_lines(self) -> list[str]:
        return [dumps_record({**rec, "cirs": score.to_dict()}) for rec, score in self.scored]

    def rejected_lines(self) -> list[str]:
        return [dumps_record({**rec, "reject_reason": reason}) for rec, reason in self.rejected]


def dumps_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False)


def default_workers() -> int:
    return os.cpu_count() or 1


def _analyze_all(codes: list, workers: int) -> list[Analysis | str]:
    if workers <= 1 or len(codes) < 2 * workers:
        return [_check(c) for c in codes]
    chunk = max(1, len(codes) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_check, codes, chunksize=chunk))


def score_corpus(
    records: Iterable[dict],
    stats: CorpusStats | None = None,
    workers: int = 1,
) -> ScoredCorpus:
    """Score every valid record; invalid ones go to the reject stream.

    ``stats`` pins the normalization to a frozen reference distribution;
    otherwise it is computed over the valid records of this corpus.
    Output order is input order regardless of ``workers``.
    """
    records = list(records)
    seen: set = set()
    precheck: list[str | None] = []
    for rec in records:
        try:
            unit = source_unit(rec)
        except ValueError as exc:
            precheck.append(str(exc))
            continue
        if unit.id in seen:
            precheck.append(f"duplicate id {unit.id!r}")
            continue
        seen.add(unit.id)
        precheck.append(None)

    todo = [i for i, p in enumerate(precheck) if p is None]
    results = _analyze_all([records[i]["code"] for i in todo], workers)
    outcome: list[Analysis | str] = list(precheck)
    for i, res in zip(todo, results):
        outcome[i] = res

    valid = [o for o in outcome if isinstance(o, Analysis)]
    if not valid:
        raise EmptyCorpusError("corpus has no valid records")
    if stats is None:
        stats = accumulate_stats(a.summary for a in valid)

    scored, rejected = [], []
    for rec, res in zip(records, outcome):
        if isinstance(res, Analysis):
            scored.append((rec, score_analysis(res, stats)))
        else:
            rejected.append((rec, res))
    return ScoredCorpus(scored, rejected, stats)

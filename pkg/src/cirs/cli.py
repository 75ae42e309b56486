"""``cirs`` command line: score, stats, stratify, filter, report, synth, rules, pipeline.

Exit codes: 0 success, 1 usage or I/O error, 2 empty result, 3 partial
synthesis (budget exhausted before the target).
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .frontend import (
    GRAMMAR_VERSION,
    KIND_VOCABULARY,
    TOKEN_CLASSES,
    CorpusFormatError,
    read_jsonl,
)
from .logical import DECISION_RULES, HALSTEAD_RULES
from .scorer import CorpusStats, EmptyCorpusError, default_workers, dumps_record, score_corpus
from .stratify import (
    StratifyError,
    ThresholdSet,
    auto_thresholds,
    filter_dataset,
    manifest as stratify_manifest,
    parse_keep,
    stratify,
)

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("cirs")

EXIT_OK, EXIT_ERROR, EXIT_EMPTY, EXIT_PARTIAL = 0, 1, 2, 3
HIST_BINS = 20

DEFAULTS = {
    "k": 3,
    "seed": 0,
    "j_min": 0.0,
    "j_max": math.inf,
    "init": "quantile",
    "prune_each_iter": False,
    "max_iters": 100,
    "target": 10,
    "budget": 100,
    "max_attempts": 3,
    "concurrency": 1,
    "model": "gpt-3.5-turbo",
    "workers": None,
    "log_level": "WARNING",
}
PATH_KEYS = ("input", "output", "stats", "stats_out", "rejects", "manifest", "csv", "assignments")


class UsageError(Exception):
    pass


def _write_lines(path: Path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def _write_json(path: Path, data) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, ensure_ascii=False)
        fh.write("\n")


def _read_records(paths) -> list[dict]:
    out = []
    for p in paths:
        out.extend(read_jsonl(p))
    return out


def _default_path(output: Path, suffix: str) -> Path:
    name = output.name
    for ext in (".jsonl", ".json"):
        if name.endswith(ext):
            name = name[: -len(ext)]
            break
    return output.with_name(name + suffix)


def _effective(cfg: argparse.Namespace) -> dict:
    """JSON-friendly config echo; paths as given, infinities as null."""
    out = {}
    for key, value in sorted(vars(cfg).items()):
        if key in ("func", "config") or value is None:
            continue
        if isinstance(value, float) and math.isinf(value):
            value = None
        elif isinstance(value, Path):
            value = str(value)
        elif isinstance(value, list):
            value = [str(v) if isinstance(v, Path) else v for v in value]
        out[key] = value
    return out


def _workers(cfg) -> int:
    return cfg.workers if cfg.workers else default_workers()


# -- subcommands -------------------------------------------------------------

def cmd_score(cfg) -> int:
    output = Path(_require(cfg, "output"))
    stats_out = Path(cfg.stats_out) if cfg.stats_out else _default_path(output, ".stats.json")
    rejects = Path(cfg.rejects) if cfg.rejects else _default_path(output, ".rejects.jsonl")
    _distinct_paths(cfg.input + [output, stats_out, rejects] + ([cfg.stats] if cfg.stats else []))
    records = _read_records(cfg.input)
    frozen = CorpusStats.load(cfg.stats) if cfg.stats else None
    try:
        result = score_corpus(records, stats=frozen, workers=_workers(cfg))
    except EmptyCorpusError as exc:
        print(f"cirs score: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    _write_lines(output, result.scored_lines())
    _write_lines(rejects, result.rejected_lines())
    result.stats.dump(stats_out)
    print(json.dumps({"scored": len(result.scored), "rejected": len(result.rejected),
                      "output": str(output), "stats": str(stats_out), "rejects": str(rejects)}))
    return EXIT_OK


def cmd_stats(cfg) -> int:
    output = Path(_require(cfg, "output"))
    _distinct_paths(cfg.input + [output])
    try:
        result = score_corpus(_read_records(cfg.input), workers=_workers(cfg))
    except EmptyCorpusError as exc:
        print(f"cirs stats: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    result.stats.dump(output)
    print(json.dumps(result.stats.to_dict()))
    return EXIT_OK


def _thresholds(cfg, scores) -> ThresholdSet:
    if cfg.auto_thresholds:
        lo, hi = cfg.auto_thresholds
        return auto_thresholds(scores, lo, hi)
    return ThresholdSet(cfg.j_min, cfg.j_max)


def _stratify_records(cfg, records):
    if not records:
        raise UsageError("no scored records to stratify")
    pairs = []
    for rec in records:
        try:
            pairs.append((rec["id"], float(rec["cirs"]["score"])))
        except (KeyError, TypeError, ValueError):
            raise UsageError(f"record {rec.get('id')!r} has no cirs.score; run `cirs score` first") from None
    thresholds = _thresholds(cfg, [s for _, s in pairs])
    model, assignments = stratify(pairs, k=cfg.k, thresholds=thresholds, seed=cfg.seed,
                                  max_iters=cfg.max_iters, init=cfg.init,
                                  prune_each_iter=cfg.prune_each_iter)
    info = stratify_manifest(model, assignments, k=cfg.k, seed=cfg.seed, thresholds=thresholds,
                             init=cfg.init, prune_each_iter=cfg.prune_each_iter, config=_effective(cfg))
    out = [{**rec, "stratum": a.stratum, "cluster": a.cluster} for rec, a in zip(records, assignments)]
    return out, info


def _print_strata(info) -> None:
    print("stratum\tcount\tcentroid\tdispersion\tretained")
    for name, s in info["strata"].items():
        print(f"{name}\t{s['count']}\t{s['centroid']:.9f}\t{s['dispersion']:.9f}\t{str(s['retained']).lower()}")


def cmd_stratify(cfg) -> int:
    output = Path(_require(cfg, "output"))
    manifest_path = Path(cfg.manifest) if cfg.manifest else _default_path(output, ".manifest.json")
    _distinct_paths(cfg.input + [output, manifest_path])
    records = _read_records(cfg.input)
    if not records:
        print("cirs stratify: no scored records", file=sys.stderr)
        return EXIT_EMPTY
    out, info = _stratify_records(cfg, records)
    _write_lines(output, (dumps_record(r) for r in out))
    _write_json(manifest_path, info)
    _print_strata(info)
    return EXIT_OK


def cmd_filter(cfg) -> int:
    output = Path(_require(cfg, "output"))
    keep = parse_keep(_require(cfg, "keep"))
    manifest_path = Path(cfg.manifest) if cfg.manifest else _default_path(output, ".manifest.json")
    _distinct_paths(cfg.input + [output, manifest_path])
    kept, info = filter_dataset(_read_records(cfg.input), keep)
    info["config"] = _effective(cfg)
    _write_lines(output, (dumps_record(r) for r in kept))
    _write_json(manifest_path, info)
    print(json.dumps({k: info[k] for k in ("input", "kept", "dropped", "pruned")}))
    return EXIT_OK if kept else EXIT_EMPTY


def histogram(scores, bins: int = HIST_BINS) -> list[int]:
    counts = [0] * bins
    for s in scores:
        counts[min(max(int(s * bins), 0), bins - 1)] += 1
    return counts


def cmd_report(cfg) -> int:
    records = _read_records(cfg.input)
    scores = [float(r["cirs"]["score"]) for r in records if isinstance(r.get("cirs"), dict)]
    if not scores:
        print("cirs report: no scored records", file=sys.stderr)
        return EXIT_EMPTY
    counts = histogram(scores)
    p10, p50, p90 = np.percentile(scores, [10, 50, 90]).tolist()
    width = max(counts)
    print("bin_lo\tbin_hi\tcount\thistogram")
    for i, c in enumerate(counts):
        bar = "#" * round(40 * c / width)
        print(f"{i / HIST_BINS:.2f}\t{(i + 1) / HIST_BINS:.2f}\t{c}\t{bar}")
    print(f"n\t{len(scores)}")
    print(f"p10\t{p10:.9f}\np50\t{p50:.9f}\np90\t{p90:.9f}")
    if cfg.csv:
        with open(cfg.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("bin_lo,bin_hi,count\n")
            for i, c in enumerate(counts):
                fh.write(f"{i / HIST_BINS:.2f},{(i + 1) / HIST_BINS:.2f},{c}\n")
    return EXIT_OK


def rules_table() -> dict:
    return {
        "grammar": "python-%d.%d" % GRAMMAR_VERSION,
        "token_classes": TOKEN_CLASSES,
        "halstead": HALSTEAD_RULES,
        "decision_points": DECISION_RULES,
        "kind_vocabulary": list(KIND_VOCABULARY),
    }


def cmd_rules(cfg) -> int:
    text = json.dumps(rules_table(), indent=2)
    if cfg.output:
        Path(cfg.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def cmd_synth(cfg) -> int:
    from .synth import HTTPClient, MockClient, load_seed_pool, synthesize_corpus

    output = Path(_require(cfg, "output"))
    manifest_path = Path(cfg.manifest) if cfg.manifest else _default_path(output, ".manifest.json")
    _distinct_paths(cfg.input + [output, manifest_path])
    pool = load_seed_pool(_read_records(cfg.input))
    if cfg.mock:
        client = MockClient.from_file(cfg.mock)
    elif cfg.endpoint:
        client = HTTPClient(cfg.endpoint, cfg.credential_env, model=cfg.model)
    else:
        raise UsageError("synth needs --endpoint or --mock")
    result = synthesize_corpus(pool, cfg.target, client, seed=cfg.seed, budget=cfg.budget,
                               max_attempts=cfg.max_attempts, concurrency=cfg.concurrency)
    _write_lines(output, (dumps_record(s.to_record()) for s in result.accepted))
    result.manifest["config"] = _effective(cfg)
    _write_json(manifest_path, result.manifest)
    m = result.manifest
    print(json.dumps({k: m[k] for k in ("status", "accepted", "rejected_syntax", "rejected_duplicate", "calls")}))
    if m["accepted"] == 0:
        return EXIT_EMPTY
    return EXIT_OK if result.complete else EXIT_PARTIAL


def cmd_pipeline(cfg) -> int:
    outdir = Path(_require(cfg, "output"))
    outdir.mkdir(parents=True, exist_ok=True)
    keep = parse_keep(cfg.keep or "medium")
    records = _read_records(cfg.input)
    try:
        result = score_corpus(records, stats=CorpusStats.load(cfg.stats) if cfg.stats else None,
                              workers=_workers(cfg))
    except EmptyCorpusError as exc:
        print(f"cirs pipeline: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    _write_lines(outdir / "scored.jsonl", result.scored_lines())
    _write_lines(outdir / "rejects.jsonl", result.rejected_lines())
    result.stats.dump(outdir / "stats.json")
    scored = [json.loads(line) for line in result.scored_lines()]
    stratified, info = _stratify_records(cfg, scored)
    _write_lines(outdir / "strata.jsonl", (dumps_record(r) for r in stratified))
    _write_json(outdir / "strata.manifest.json", info)
    kept, finfo = filter_dataset(stratified, keep)
    finfo["config"] = _effective(cfg)
    _write_lines(outdir / "filtered.jsonl", (dumps_record(r) for r in kept))
    _write_json(outdir / "filtered.manifest.json", finfo)
    _print_strata(info)
    return EXIT_OK if kept else EXIT_EMPTY


# -- argument handling -------------------------------------------------------

def _require(cfg, key):
    value = getattr(cfg, key, None)
    if value is None:
        raise UsageError(f"--{key.replace('_', '-')} is required")
    return value


def _distinct_paths(paths) -> None:
    resolved = [Path(p).resolve() for p in paths]
    if len(set(resolved)) != len(resolved):
        raise UsageError("input and output paths must all be distinct")


def _add_common(p: argparse.ArgumentParser, inputs=True) -> None:
    if inputs:
        p.add_argument("--input", nargs="+", type=Path, help="input JSONL file(s)")
    p.add_argument("--output", type=Path)
    p.add_argument("--config", type=Path, help="TOML config; flags override it")
    p.add_argument("--workers", type=int)
    p.add_argument("--log-level")


def _add_stratify(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--j-min", type=float)
    p.add_argument("--j-max", type=float)
    p.add_argument("--auto-thresholds", nargs=2, type=float, metavar=("P_LO", "P_HI"))
    p.add_argument("--init", choices=("quantile", "random"))
    p.add_argument("--prune-each-iter", action="store_true", default=None)
    p.add_argument("--max-iters", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cirs", description="Complexity-impacted reasoning scores for code.")
    parser.add_argument("--version", action="version", version=f"cirs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score a JSONL corpus")
    _add_common(p)
    p.add_argument("--stats", type=Path, help="frozen stats JSON to normalize against")
    p.add_argument("--stats-out", type=Path)
    p.add_argument("--rejects", type=Path)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("stats", help="write corpus feature statistics")
    _add_common(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("stratify", help="cluster scored records into strata")
    _add_common(p)
    _add_stratify(p)
    p.add_argument("--manifest", type=Path)
    p.set_defaults(func=cmd_stratify)

    p = sub.add_parser("filter", help="keep one stratum or score interval")
    _add_common(p)
    p.add_argument("--keep", help="stratum name or interval such as [0.2,0.6)")
    p.add_argument("--manifest", type=Path)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("report", help="histogram and quantiles of scores")
    _add_common(p)
    p.add_argument("--csv", type=Path)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rules", help="print the frozen classification tables as JSON")
    _add_common(p, inputs=False)
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("synth", help="synthesize a corpus from a seed pool")
    _add_common(p)
    p.add_argument("--manifest", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--target", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--max-attempts", type=int)
    p.add_argument("--concurrency", type=int)
    p.add_argument("--endpoint")
    p.add_argument("--credential-env")
    p.add_argument("--model")
    p.add_argument("--mock", type=Path, help="JSON list of scripted completions")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pipeline", help="score, stratify and filter into an output directory")
    _add_common(p)
    _add_stratify(p)
    p.add_argument("--stats", type=Path)
    p.add_argument("--keep")
    p.set_defaults(func=cmd_pipeline)
    return parser


def load_config(path: Path, command: str) -> dict:
    """Flat ``key = value`` TOML; a table named after the subcommand overrides."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    flat = {k.replace("-", "_"): v for k, v in data.items() if not isinstance(v, dict)}
    section = data.get(command, {})
    flat.update({k.replace("-", "_"): v for k, v in section.items()})
    return flat


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Apply precedence flags > config file > defaults and validate numbers."""
    file_cfg = load_config(args.config, args.command) if args.config else {}
    for key, value in vars(args).items():
        if value is not None or key in ("func", "command"):
            continue
        if key in file_cfg:
            value = file_cfg[key]
            if key == "input":
                value = [Path(value)] if isinstance(value, str) else [Path(v) for v in value]
            elif key in PATH_KEYS and value is not None:
                value = Path(value)
        elif key in DEFAULTS:
            value = DEFAULTS[key]
        setattr(args, key, value)
    for key in ("k", "max_iters", "target", "budget", "max_attempts", "concurrency"):
        v = getattr(args, key, None)
        if v is not None and (not isinstance(v, int) or v < 1):
            raise UsageError(f"--{key.replace('_', '-')} must be a positive integer")
    if getattr(args, "seed", None) is not None and not isinstance(args.seed, int):
        raise UsageError("--seed must be an integer")
    if getattr(args, "workers", None) is not None and args.workers < 1:
        raise UsageError("--workers must be >= 1")
    if hasattr(args, "j_min"):
        ThresholdSet(float(args.j_min), float(args.j_max))
    if hasattr(args, "input") and args.command != "rules" and not args.input:
        raise UsageError("--input is required")
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for bad usage; 2 is reserved here for empty results
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        cfg = resolve(args)
        logging.basicConfig(level=str(cfg.log_level).upper(), stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        return cfg.func(cfg)
    except (UsageError, CorpusFormatError, StratifyError, ValueError, OSError, KeyError, RuntimeError) as exc:
        print(f"cirs {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

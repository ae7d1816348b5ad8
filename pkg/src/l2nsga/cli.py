"""Command-line front end: ``run``, ``evaluate`` and ``synth``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from l2nsga import indicators, stats
from l2nsga.engine import ALGORITHMS, LINKAGE_SOURCES, RunConfig, run
from l2nsga.instance import (
    InstanceFormatError,
    generate_faults,
    generate_synthetic,
    load_faults,
    load_instance,
    parse_block,
    write_faults,
    write_instance,
)
from l2nsga.results import format_front, instance_digest, read_result, write_result

INSTANCE_COPY = "instance.txt"
FAULTS_COPY = "faults.txt"
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad input from the user; reported without a traceback, exit status 2."""


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def parse_seeds(text) -> list[int]:
    """``"0-4,9"`` -> ``[0, 1, 2, 3, 4, 9]``; lists of ints pass through."""
    if isinstance(text, (list, tuple)):
        seeds = [int(s) for s in text]
    else:
        seeds = []
        for part in str(text).split(","):
            part = part.strip()
            lo, sep, hi = part.partition("-")
            try:
                seeds.extend(range(int(lo), int(hi) + 1) if sep else [int(part)])
            except ValueError:
                raise UsageError(f"bad seed list {text!r}") from None
    if not seeds:
        raise UsageError("no seeds given")
    if len(set(seeds)) != len(seeds):
        raise UsageError(f"seeds must be distinct: {seeds}")
    return seeds


def _parse_algos(text) -> list[str]:
    algos = list(text) if isinstance(text, (list, tuple)) else [a.strip() for a in str(text).split(",")]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad or not algos:
        raise UsageError(f"unknown algorithm(s) {bad}; choose from {list(ALGORITHMS)}")
    return algos


# ----------------------------------------------------------------------- manifest

FLAG_TO_CONFIG = {
    "pop": "population_size",
    "evals": "max_evaluations",
    "pc": "crossover_probability",
    "pm": "mutation_probability",
    "linkage_source": "linkage_source",
    "snapshot_every": "snapshot_every",
}


@dataclass
class ExperimentManifest:
    instance: Path
    out: Path
    faults: Path | None = None
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    seeds: list[int] = field(default_factory=lambda: list(range(20)))
    overrides: dict = field(default_factory=dict)

    def config(self, algorithm: str, seed: int) -> RunConfig:
        return RunConfig(**self.overrides, algorithm=algorithm, seed=seed).validate()


def _read_manifest(path: Path) -> dict:
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise UsageError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON manifest: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"{path}: manifest must be a JSON object")
    known = {"instance", "faults", "algorithms", "seeds", "config", "out"}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"{path}: unknown manifest keys {sorted(unknown)}")
    base = path.parent
    for key in ("instance", "faults", "out"):
        if data.get(key) is not None:
            data[key] = base / data[key]
    return data


def build_manifest(args) -> ExperimentManifest:
    """Merge flags over the manifest file over built-in defaults."""
    data = _read_manifest(Path(args.manifest)) if args.manifest else {}
    overrides = dict(data.get("config") or {})
    allowed = {f.name for f in fields(RunConfig)} - {"algorithm", "seed"}
    unknown = set(overrides) - allowed
    if unknown:
        raise UsageError(f"unknown config keys {sorted(unknown)}")
    for flag, key in FLAG_TO_CONFIG.items():
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value

    instance = args.instance or data.get("instance")
    out = args.out or data.get("out")
    if instance is None:
        raise UsageError("no instance given (--instance or manifest 'instance')")
    if out is None:
        raise UsageError("no output directory given (--out or manifest 'out')")
    manifest = ExperimentManifest(instance=Path(instance), out=Path(out))
    faults = args.faults or data.get("faults")
    manifest.faults = Path(faults) if faults else None
    if args.algo or "algorithms" in data:
        manifest.algorithms = _parse_algos(args.algo or data["algorithms"])
    if args.seeds is not None or "seeds" in data:
        manifest.seeds = parse_seeds(args.seeds if args.seeds is not None else data["seeds"])
    manifest.overrides = overrides
    try:
        manifest.config(manifest.algorithms[0], manifest.seeds[0])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid configuration: {exc}") from None
    return manifest


def result_name(algorithm: str, seed: int) -> str:
    return f"{algorithm}-seed{seed}.json"


def _run_one(job):
    config, instance, digest, out = job
    result = run(config, instance)
    write_result(result, out / result_name(config.algorithm, config.seed), digest)
    return config.algorithm, config.seed, result.evaluations, len(result.front_F), result.wall_time


def _load_inputs(instance_path: Path, faults_path: Path | None):
    if not instance_path.is_file():
        raise UsageError(f"instance file not found: {instance_path}")
    try:
        instance = load_instance(instance_path)
        faults = load_faults(faults_path, instance) if faults_path else None
    except FileNotFoundError as exc:
        raise UsageError(f"file not found: {exc.filename}") from None
    except InstanceFormatError as exc:
        raise UsageError(str(exc)) from None
    return instance, faults


def cmd_run(args) -> int:
    manifest = build_manifest(args)
    instance, faults = _load_inputs(manifest.instance, manifest.faults)
    out = manifest.out
    out.mkdir(parents=True, exist_ok=True)
    write_instance(instance, out / INSTANCE_COPY)
    if faults is not None:
        write_faults(faults, out / FAULTS_COPY)
    digest = instance_digest(instance)
    jobs = [
        (manifest.config(algo, seed), instance, digest, out)
        for algo in manifest.algorithms
        for seed in manifest.seeds
    ]
    _log(f"{len(jobs)} run(s) on {instance.name} ({instance.num_tests} tests) -> {out}")
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            done = pool.map(_run_one, jobs)
            for algo, seed, evals, size, wall in done:
                _log(f"  {algo} seed {seed}: {evals} evaluations, front {size}, {wall:.2f}s")
    else:
        for job in jobs:
            algo, seed, evals, size, wall = _run_one(job)
            _log(f"  {algo} seed {seed}: {evals} evaluations, front {size}, {wall:.2f}s")
    return 0


# ----------------------------------------------------------------------- evaluate


def _median_run(values: list[float]) -> int:
    """Index of the lower-median value (stable on ties)."""
    order = np.argsort(values, kind="stable")
    return int(order[(len(values) - 1) // 2])


def _tsv(rows) -> str:
    return "".join("\t".join(str(v) for v in r) + "\n" for r in rows)


def cmd_evaluate(args) -> int:
    results_dir = Path(args.results)
    if not results_dir.is_dir():
        raise UsageError(f"results directory not found: {results_dir}")
    files = sorted(p for p in results_dir.glob("*.json") if not p.name.endswith(".timing.json"))
    try:
        runs = [read_result(p) for p in files]
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"unreadable result file: {exc}") from None
    if not runs:
        raise UsageError(f"no result files in {results_dir}")
    digests = {r.instance_sha256 for r in runs}
    if len(digests) > 1:
        raise UsageError(f"{results_dir} mixes results from {len(digests)} different instances; refusing")

    instance = None
    instance_path = Path(args.instance) if args.instance else results_dir / INSTANCE_COPY
    if args.faults:
        instance, faults = _load_inputs(instance_path, Path(args.faults))
        if instance_digest(instance) not in digests:
            raise UsageError(f"{instance_path} is not the instance these results were produced on")
    else:
        faults = None

    order = {a: i for i, a in enumerate(ALGORITHMS)}
    runs.sort(key=lambda r: (order.get(r.algorithm, len(order)), r.algorithm, r.seed))
    algorithms = list(dict.fromkeys(r.algorithm for r in runs))

    fronts = [indicators.Front(r.front_F, r.front_X) for r in runs]
    reference = indicators.build_reference_front(fronts)
    metrics = {"IGD": [], "HV": []}
    if faults is not None:
        metrics["ICE"] = []
    for front in fronts:
        metrics["IGD"].append(indicators.igd(front, reference))
        metrics["HV"].append(indicators.hypervolume(front))
        if faults is not None:
            metrics["ICE"].append(indicators.cost_effectiveness(front, instance, faults))

    out = Path(args.out) if args.out else results_dir / "report"
    out.mkdir(parents=True, exist_ok=True)
    (out / "reference_front.txt").write_text(format_front(reference.X, reference.F))

    header = ["algorithm", "seed", *metrics]
    rows = [header] + [
        [r.algorithm, r.seed, *(repr(metrics[m][i]) for m in metrics)] for i, r in enumerate(runs)
    ]
    (out / "indicators.tsv").write_text(_tsv(rows))

    system = runs[0].instance
    comparisons = []
    for i, a in enumerate(algorithms):
        for b in algorithms[i + 1:]:
            # the linkage variant is reported as the first sample, as in the comparison tables
            first, second = (b, a) if order.get(b, 0) > order.get(a, 0) else (a, b)
            for m, vals in metrics.items():
                sa = stats.SampleSet([v for v, r in zip(vals, runs) if r.algorithm == first], first)
                sb = stats.SampleSet([v for v, r in zip(vals, runs) if r.algorithm == second], second)
                comparisons.append(stats.compare(sa, sb, m, system))

    summary = [["algorithm", "runs"] + [f"{m}_{s}" for m in metrics for s in ("median", "iqr")]]
    for algo in algorithms:
        line = [algo, sum(r.algorithm == algo for r in runs)]
        for m, vals in metrics.items():
            sample = stats.SampleSet([v for v, r in zip(vals, runs) if r.algorithm == algo], algo)
            line += [repr(sample.median()), repr(sample.iqr())]
        summary.append(line)
    (out / "summary.tsv").write_text(_tsv(summary))
    (out / "comparison.tsv").write_text(_tsv([stats.Comparison.HEADER] + [c.row() for c in comparisons]))

    text = [f"instance {system}: {len(runs)} run(s), reference front of {len(reference)} point(s)\n"]
    for m in metrics:
        part = [c for c in comparisons if c.metric == m]
        if part:
            text.append(f"\n{m}\n{stats.format_table(part)}")
    (out / "comparison.txt").write_text("".join(text))

    fronts_dir = out / "fronts"
    fronts_dir.mkdir(exist_ok=True)
    for algo in algorithms:
        idx = [i for i, r in enumerate(runs) if r.algorithm == algo]
        pick = idx[_median_run([metrics["IGD"][i] for i in idx])]
        (fronts_dir / f"{algo}-median-igd.txt").write_text(format_front(runs[pick].front_X, runs[pick].front_F))
    _log(f"report for {len(runs)} run(s) written to {out}")
    sys.stdout.write("".join(text))
    return 0


# -------------------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    try:
        blocks = [parse_block(b) for b in args.block]
        instance = generate_synthetic(
            args.tests, args.statements, args.branches, blocks=blocks, seed=args.seed, name=args.name
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    write_instance(instance, out)
    if args.faults is not None:
        faults_out = Path(args.faults_out) if args.faults_out else out.with_suffix(".faults")
        try:
            faults = generate_faults(instance, args.faults, args.max_detectors, seed=args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        write_faults(faults, faults_out)
    _log(f"wrote {out} ({instance.num_tests} tests)")
    return 0


# ------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l2nsga", description="Multi-objective test case selection.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run algorithms over seeds and write one result file per run")
    p.add_argument("--manifest", help="JSON experiment manifest; flags override its entries")
    p.add_argument("--instance", help="coverage instance file")
    p.add_argument("--faults", help="fault matrix file (copied next to the results)")
    p.add_argument("--algo", help=f"comma-separated subset of {','.join(ALGORITHMS)} (default: both)")
    p.add_argument("--seeds", help="seed list such as 0-19 or 1,5,9 (default 0-19)")
    p.add_argument("--pop", type=int, help="population size (default 100)")
    p.add_argument("--evals", type=int, help="evaluation budget (default 20000)")
    p.add_argument("--pc", type=float, help="crossover probability (default 0.8)")
    p.add_argument("--pm", type=float, help="per-bit mutation probability (default 1/n)")
    p.add_argument("--linkage-source", choices=LINKAGE_SOURCES, help="population the linkage model is learned from")
    p.add_argument("--snapshot-every", type=int, help="record the first front every k generations")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="reference front, indicators and statistical comparison")
    p.add_argument("results", help="directory produced by 'run'")
    p.add_argument("--faults", help="fault matrix; enables the cost-effectiveness metric")
    p.add_argument("--instance", help=f"instance file (default: <results>/{INSTANCE_COPY})")
    p.add_argument("--out", help="report directory (default: <results>/report)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic instance")
    p.add_argument("--tests", type=int, required=True)
    p.add_argument("--statements", type=int, required=True)
    p.add_argument("--branches", type=int, required=True)
    p.add_argument("--block", action="append", default=[], help="planted block tests:statements[:branches], e.g. 0-7:0-39:0-19")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", help="instance name (default derived from the sizes and seed)")
    p.add_argument("--faults", type=int, help="also write a fault matrix with this many faults")
    p.add_argument("--max-detectors", type=int, default=3)
    p.add_argument("--faults-out", help="fault file path (default: <out> with suffix .faults)")
    p.add_argument("--out", required=True, help="instance file to write")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"l2nsga {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"l2nsga {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``thaad <command> [options]``.

Every command reads ``--config`` (JSON, see :class:`thaad.io.RunConfig`);
explicit flags win over the config. Exit status is 0 on success and 2 on bad
input or usage.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

from . import io as tio
from .abstraction import AbstractionError, abstract_series
from .bench import fit_exponent, run_bench
from .encoding import EncodingError
from .evaluation import score, sweep
from .matching import MatchError
from .pipeline import PipelineConfig, detect
from .synthetic import DAY, SyntheticSpecError, generate_synthetic

log = logging.getLogger("thaad")

INPUT_ERRORS = (tio.DataFormatError, tio.ConfigError, AbstractionError, EncodingError,
                MatchError, SyntheticSpecError)


class UsageError(Exception):
    pass


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_pipeline_flags(p: argparse.ArgumentParser, grid: bool = False) -> None:
    g = p.add_argument_group("pipeline")
    if not grid:
        g.add_argument("--x", "--pattern-length", dest="pattern_length", type=int)
        g.add_argument("--alpha", type=float)
        g.add_argument("--beta", type=float)
        g.add_argument("--metric", choices=["L1", "L2"], type=str.upper)
    g.add_argument("--matcher", choices=["index", "hash", "brute"])
    g.add_argument("--max-duration", dest="max_candidate_duration", type=int)
    g.add_argument("--levels", dest="index_levels", type=int, help="tree levels of the index")


def _out(p: argparse.ArgumentParser, required=False, help="output file (default: stdout)") -> None:
    p.add_argument("-o", "--output", required=required, help=help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thaad", description="Trend-based anomaly detection on time series.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config")
    common.add_argument("-v", "--verbose", action="count", default=0)

    def command(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    p = command("abstract", "gradient abstraction of a time-points CSV into intervals")
    p.add_argument("-i", "--input")
    _out(p)

    p = command("detect", "run the detection pipeline and write reports")
    p.add_argument("-i", "--input")
    _add_pipeline_flags(p)
    p.add_argument("--workers", type=int, default=1, help="processes, entities are split among them")
    _out(p)

    p = command("eval", "score a reports CSV against a truth CSV")
    p.add_argument("--reports")
    p.add_argument("--truth")
    _out(p)

    p = command("sweep", "score the pipeline over an (alpha, beta, x, metric) grid")
    p.add_argument("-i", "--input")
    p.add_argument("--truth")
    p.add_argument("--alphas", type=_floats)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--betas", type=_floats, help="absolute beta values")
    g.add_argument("--beta-multipliers", type=_floats, help="beta = m * alpha for each m")
    p.add_argument("--xs", type=_ints)
    p.add_argument("--metrics", type=lambda s: [m.strip().upper() for m in s.split(",")])
    _add_pipeline_flags(p, grid=True)
    _out(p)

    p = command("synth", "generate synthetic traffic and its truth events")
    p.add_argument("--seed", type=int)
    p.add_argument("--entities", type=int)
    p.add_argument("--days", type=float)
    p.add_argument("--anomalies", type=int)
    p.add_argument("-o", "--output", help="time-points CSV (default: stdout)")
    p.add_argument("--truth", help="truth CSV")

    p = command("bench", "time the brute-force scan against the index")
    p.add_argument("--min-log2", type=int)
    p.add_argument("--max-log2", type=int)
    p.add_argument("--x", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--queries", type=int)
    p.add_argument("--seed", type=int)
    _out(p)
    return parser


def _path(args, cfg: tio.RunConfig, flag: str, key: str, what: str) -> str:
    value = getattr(args, flag, None) or cfg.paths.get(key)
    if not value:
        raise UsageError(f"missing {what}: pass --{flag.replace('_', '-')} or set paths.{key} in the config")
    return value


def _pipeline_cfg(args, cfg: tio.RunConfig) -> PipelineConfig:
    over = {}
    for name in ("pattern_length", "alpha", "beta", "metric", "matcher", "max_candidate_duration",
                 "index_levels"):
        v = getattr(args, name, None)
        if v is not None:
            over[name] = v
    try:
        return dataclasses.replace(cfg.pipeline, **over)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _output(args, cfg: tio.RunConfig):
    return args.output or cfg.paths.get("output") or sys.stdout


def _load_series(path: str):
    return tio.flatten(tio.load_time_points(path))


def _variable_map(series, cfg: tio.RunConfig) -> dict:
    vm = dict(cfg.variable_map)
    for s in series:
        if s.variable not in vm:
            free = len(vm)
            while free in vm.values():
                free += 1
            vm[s.variable] = free
    return vm


def _detect_group(args):
    series, pcfg, vm = args
    return detect(series, pcfg, vm)


def run_detect(series, pcfg: PipelineConfig, vm: dict, workers: int = 1):
    """Reports sorted by (entity, start, end); identical for any ``workers``."""
    if workers > 1:
        by_entity = {}
        for s in series:
            by_entity.setdefault(s.entity, []).append(s)
        groups = [[] for _ in range(workers)]
        for i, entity in enumerate(sorted(by_entity, key=str)):
            groups[i % workers].extend(by_entity[entity])
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_detect_group, [(g, pcfg, vm) for g in groups if g]))
        reports = [r for part in parts for r in part]
    else:
        reports = detect(series, pcfg, vm)
    return sorted(reports, key=lambda r: (str(r.entity), r.start, r.end))


def cmd_abstract(args, cfg: tio.RunConfig) -> None:
    series = _load_series(_path(args, cfg, "input", "input", "input time points"))
    intervals = []
    for s in series:
        intervals.extend(abstract_series(s, cfg.pipeline.abstraction))
    tio.write_intervals(intervals, _output(args, cfg))


def cmd_detect(args, cfg: tio.RunConfig) -> None:
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    pcfg = _pipeline_cfg(args, cfg)
    series = _load_series(_path(args, cfg, "input", "input", "input time points"))
    reports = run_detect(series, pcfg, _variable_map(series, cfg), args.workers)
    tio.write_reports(reports, _output(args, cfg))


def cmd_eval(args, cfg: tio.RunConfig) -> None:
    reports = tio.load_reports(_path(args, cfg, "reports", "reports", "reports"))
    truth = tio.load_truth(_path(args, cfg, "truth", "truth", "truth events"))
    tio.write_eval(score(reports, truth), _output(args, cfg))


def cmd_sweep(args, cfg: tio.RunConfig) -> None:
    sc = cfg.sweep
    alphas = args.alphas if args.alphas is not None else sc.alphas
    if args.betas is not None:
        betas, mults = args.betas, None
    elif args.beta_multipliers is not None:
        betas, mults = None, args.beta_multipliers
    else:
        betas, mults = sc.betas, sc.beta_multipliers
        if betas is not None and mults is not None:
            raise UsageError("config sweep sets both betas and beta_multipliers")
    xs = args.xs if args.xs is not None else sc.xs
    metrics = args.metrics if args.metrics is not None else sc.metrics
    for m in metrics:
        if m not in ("L1", "L2"):
            raise UsageError(f"unknown metric {m!r}")
    if not alphas or not xs or not metrics or not (betas or mults):
        raise UsageError("sweep grid is empty")
    if min(alphas) < 0 or min(betas or mults) < 0 or min(xs) < 1:
        raise UsageError("alphas and betas must be non-negative and xs positive")
    pcfg = _pipeline_cfg(args, cfg)
    series = _load_series(_path(args, cfg, "input", "input", "input time points"))
    truth = tio.load_truth(_path(args, cfg, "truth", "truth", "truth events"))
    rows = sweep(series, truth, alphas, betas, xs, metrics, pcfg, beta_multipliers=mults)
    tio.write_sweep(rows, _output(args, cfg))


def cmd_synth(args, cfg: tio.RunConfig) -> None:
    sc = cfg.synth
    seed = args.seed if args.seed is not None else cfg.seed
    n = args.entities if args.entities is not None else sc.n_entities
    days = args.days if args.days is not None else sc.days
    count = args.anomalies if args.anomalies is not None else sc.anomalies
    if n < 1 or days <= 0 or count < 0:
        raise UsageError("entities and days must be positive, anomalies non-negative")
    series, truth = generate_synthetic(seed, n, int(round(days * DAY)), count,
                                       magnitude=(sc.magnitude_min, sc.magnitude_max))
    tio.write_time_points(series, _output(args, cfg))
    truth_path = args.truth or cfg.paths.get("truth")
    if truth_path:
        tio.write_truth(truth, truth_path)


def cmd_bench(args, cfg: tio.RunConfig) -> None:
    bc = cfg.bench
    pick = lambda flag, default: default if getattr(args, flag) is None else getattr(args, flag)  # noqa: E731
    lo, hi = pick("min_log2", bc.min_log2), pick("max_log2", bc.max_log2)
    if not 1 <= lo <= hi:
        raise UsageError("need 1 <= --min-log2 <= --max-log2")
    rows = run_bench(lo, hi, pick("x", bc.x), pick("alpha", bc.alpha), pick("beta", bc.beta),
                     queries=pick("queries", bc.queries), seed=pick("seed", cfg.seed),
                     index_levels=cfg.pipeline.index_levels, oracle_max_log2=bc.oracle_max_log2)
    tio.write_bench(rows, _output(args, cfg))
    if len(rows) >= 2:
        log.info("fitted exponent: index %.3f, oracle %.3f",
                 fit_exponent(rows), fit_exponent(rows, "oracle_ns"))


COMMANDS = {"abstract": cmd_abstract, "detect": cmd_detect, "eval": cmd_eval,
            "sweep": cmd_sweep, "synth": cmd_synth, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = tio.load_config(args.config)
        COMMANDS[args.command](args, cfg)
    except UsageError as e:
        parser.error(str(e))  # exits with status 2
    except INPUT_ERRORS as e:
        print(f"thaad {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

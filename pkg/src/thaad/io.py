"""CSV readers/writers for every artifact the tools exchange, and the run config.

All writers emit ``\\n`` line endings and a fixed number format so that
identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import IO, Dict, Hashable, Iterable, List, Optional, Sequence, Union

import numpy as np

from .abstraction import AbstractionConfig, SymbolicTimeInterval, TimePointSeries, TrendSymbol
from .evaluation import SWEEP_HEADER, EvalResult, GroundTruthEvent, SweepRow
from .matching import Metric
from .pipeline import AnomalyReport, Origin, PipelineConfig
from .synthetic import SENT_VARIABLE, TOTAL_VARIABLE

TIME_POINTS_HEADER = ("entity", "variable", "timestamp", "value")
TRUTH_HEADER = ("entity", "start", "end", "label")
INTERVALS_HEADER = ("entity", "variable", "begin", "finish", "symbol")
REPORTS_HEADER = ("entity", "start", "end", "origin")
BENCH_HEADER = ("n", "x", "alpha", "beta", "oracle_ns", "index_ns")
EVAL_HEADER = ("tp", "fp", "fn", "tpr", "fnr", "f1")

SEED_ENV = "THAAD_SEED"

PathOrFile = Union[str, os.PathLike, IO[str]]


class DataFormatError(ValueError):
    """Malformed input file; ``line`` is 1-based and counts the header."""

    def __init__(self, message: str, line: Optional[int] = None, path=None):
        where = f"{path}: " if path else ""
        where += f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class DuplicateRecordError(DataFormatError):
    pass


class ConfigError(ValueError):
    pass


# -- low level -------------------------------------------------------------------


def fmt_num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def parse_num(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("NaN is not allowed")
    return v


def parse_opt(text: str) -> Optional[float]:
    return None if text == "" else parse_num(text)


class _Sink:
    def __init__(self, target: PathOrFile):
        self.target = target
        self.fh = None

    def __enter__(self) -> IO[str]:
        if hasattr(self.target, "write"):
            return self.target
        self.fh = open(self.target, "w", encoding="utf-8", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not None:
            self.fh.close()


def _write_rows(target: PathOrFile, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with _Sink(target) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _read_rows(source: PathOrFile, header: Sequence[str]):
    """Yield (line_number, row) after checking the header."""
    if hasattr(source, "read"):
        fh, close = source, False
        path = getattr(source, "name", None)
    else:
        path = os.fspath(source)
        try:
            fh = open(path, encoding="utf-8", newline="")
        except OSError as e:
            raise DataFormatError(f"cannot open: {e.strerror}", path=path) from None
        close = True
    try:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise DataFormatError("empty file, expected header " + ",".join(header), path=path) from None
        except UnicodeDecodeError:
            raise DataFormatError("file is not valid UTF-8", 1, path) from None
        if [c.strip() for c in first] != list(header):
            raise DataFormatError(f"expected header {','.join(header)}, got {','.join(first)}", 1, path)
        try:
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise DataFormatError(f"expected {len(header)} fields, got {len(row)}",
                                          reader.line_num, path)
                yield reader.line_num, [c.strip() for c in row], path
        except UnicodeDecodeError:
            raise DataFormatError("file is not valid UTF-8", reader.line_num, path) from None
    finally:
        if close:
            fh.close()


def _field_error(e: Exception, line: int, path) -> DataFormatError:
    return DataFormatError(str(e), line, path)


# -- time points -------------------------------------------------------------------


def load_time_points(source: PathOrFile) -> "OrderedDict[str, OrderedDict[str, TimePointSeries]]":
    """Series grouped by entity then variable, in order of first appearance.

    Rows may come in any order; each series is sorted by timestamp.
    """
    rows: Dict[tuple, Dict[int, tuple]] = OrderedDict()
    for line, (entity, variable, ts, value), path in _read_rows(source, TIME_POINTS_HEADER):
        if not entity or not variable:
            raise DataFormatError("entity and variable must not be empty", line, path)
        try:
            t = int(ts)
        except ValueError:
            raise DataFormatError(f"timestamp {ts!r} is not an integer", line, path) from None
        if t < 0:
            raise DataFormatError(f"timestamp {t} is negative", line, path)
        try:
            v = float(value)
        except ValueError:
            raise DataFormatError(f"value {value!r} is not a number", line, path) from None
        if not math.isfinite(v):
            raise DataFormatError(f"value {value!r} is not finite", line, path)
        bucket = rows.setdefault((entity, variable), {})
        if t in bucket:
            raise DuplicateRecordError(
                f"duplicate record ({entity}, {variable}, {t}); first seen on line {bucket[t][0]}",
                line, path)
        bucket[t] = (line, v)
    out: "OrderedDict[str, OrderedDict[str, TimePointSeries]]" = OrderedDict()
    for (entity, variable), bucket in rows.items():
        ts = sorted(bucket)
        out.setdefault(entity, OrderedDict())[variable] = TimePointSeries(
            entity, variable, np.asarray(ts, dtype=np.int64),
            np.asarray([bucket[t][1] for t in ts], dtype=np.float64))
    return out


def flatten(grouped) -> List[TimePointSeries]:
    return [s for per_var in grouped.values() for s in per_var.values()]


def write_time_points(series: Iterable[TimePointSeries], target: PathOrFile) -> None:
    def rows():
        for s in series:
            for t, v in zip(s.timestamps.tolist(), s.values.tolist()):
                yield s.entity, s.variable, t, fmt_num(v)
    _write_rows(target, TIME_POINTS_HEADER, rows())


# -- truth ---------------------------------------------------------------------------


def load_truth(source: PathOrFile) -> List[GroundTruthEvent]:
    out = []
    for line, (entity, start, end, label), path in _read_rows(source, TRUTH_HEADER):
        try:
            out.append(GroundTruthEvent(entity, int(start), int(end), label))
        except ValueError as e:
            raise _field_error(e, line, path) from None
    return out


def write_truth(events: Iterable[GroundTruthEvent], target: PathOrFile) -> None:
    _write_rows(target, TRUTH_HEADER, ((e.entity, e.start, e.end, e.label) for e in events))


# -- intervals -------------------------------------------------------------------------


def load_intervals(source: PathOrFile) -> List[SymbolicTimeInterval]:
    out = []
    for line, (entity, variable, begin, finish, symbol), path in _read_rows(source, INTERVALS_HEADER):
        try:
            out.append(SymbolicTimeInterval(entity, variable, int(begin), int(finish),
                                            TrendSymbol.from_label(symbol)))
        except ValueError as e:
            raise _field_error(e, line, path) from None
    return out


def write_intervals(intervals: Iterable[SymbolicTimeInterval], target: PathOrFile) -> None:
    _write_rows(target, INTERVALS_HEADER,
                ((i.entity, i.variable, i.begin, i.finish, i.symbol.label) for i in intervals))


# -- reports ---------------------------------------------------------------------------


def load_reports(source: PathOrFile) -> List[AnomalyReport]:
    out = []
    for line, (entity, start, end, origin), path in _read_rows(source, REPORTS_HEADER):
        try:
            out.append(AnomalyReport(entity, int(start), int(end), Origin(origin)))
        except ValueError as e:
            raise _field_error(e, line, path) from None
    return out


def write_reports(reports: Iterable[AnomalyReport], target: PathOrFile) -> None:
    _write_rows(target, REPORTS_HEADER,
                ((r.entity, r.start, r.end, r.origin.value) for r in reports))


# -- eval / sweep / bench -------------------------------------------------------------


def write_eval(result: EvalResult, target: PathOrFile) -> None:
    row = result.as_row()
    _write_rows(target, EVAL_HEADER, [[fmt_num(row[k]) for k in EVAL_HEADER]])


def load_eval(source: PathOrFile) -> EvalResult:
    rows = [(line, r, path) for line, r, path in _read_rows(source, EVAL_HEADER)]
    if len(rows) != 1:
        raise DataFormatError(f"expected one result row, got {len(rows)}")
    line, r, path = rows[0]
    try:
        return EvalResult(int(r[0]), int(r[1]), int(r[2]))
    except ValueError as e:
        raise _field_error(e, line, path) from None


def write_sweep(rows: Iterable[SweepRow], target: PathOrFile) -> None:
    def out():
        for r in rows:
            d = r.as_dict()
            yield [fmt_num(d[k]) if k != "metric" else d[k] for k in SWEEP_HEADER]
    _write_rows(target, SWEEP_HEADER, out())


def load_sweep(source: PathOrFile) -> List[SweepRow]:
    out = []
    for line, r, path in _read_rows(source, SWEEP_HEADER):
        try:
            res = EvalResult(int(r[4]), int(r[5]), int(r[6]))
            out.append(SweepRow(parse_num(r[0]), parse_num(r[1]), int(r[2]),
                                Metric.parse(r[3]).value, res))
        except ValueError as e:
            raise _field_error(e, line, path) from None
    return out


def write_bench(rows: Iterable[dict], target: PathOrFile) -> None:
    _write_rows(target, BENCH_HEADER, ([fmt_num(r[k]) for k in BENCH_HEADER] for r in rows))


def load_bench(source: PathOrFile) -> List[dict]:
    out = []
    for line, r, path in _read_rows(source, BENCH_HEADER):
        try:
            out.append({"n": int(r[0]), "x": int(r[1]), "alpha": parse_num(r[2]),
                        "beta": parse_num(r[3]), "oracle_ns": int(r[4]), "index_ns": int(r[5])})
        except ValueError as e:
            raise _field_error(e, line, path) from None
    return out


# -- run config ------------------------------------------------------------------------


@dataclass
class SynthConfig:
    n_entities: int = 20
    days: float = 7
    anomalies: int = 10
    magnitude_min: float = 2.5
    magnitude_max: float = 4.0


@dataclass
class SweepConfig:
    alphas: List[float] = field(default_factory=lambda: [0, 1, 100, 200, 450, 750])
    beta_multipliers: Optional[List[float]] = field(default_factory=lambda: [1, 2, 3, 4])
    betas: Optional[List[float]] = None
    xs: List[int] = field(default_factory=lambda: [5])
    metrics: List[str] = field(default_factory=lambda: ["L1"])


@dataclass
class BenchConfig:
    min_log2: int = 10
    max_log2: int = 17
    x: int = 5
    alpha: float = 100
    beta: float = 300
    queries: int = 20
    oracle_max_log2: int = 17


@dataclass
class RunConfig:
    """Everything a CLI run needs. Load with :meth:`from_dict` / :func:`load_config`."""

    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    variable_map: Dict[str, int] = field(default_factory=lambda: {TOTAL_VARIABLE: 0, SENT_VARIABLE: 1})
    paths: Dict[str, str] = field(default_factory=dict)
    seed: int = 0
    minutes_per_sample: float = 1.0
    synth: SynthConfig = field(default_factory=SynthConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)

    PATH_KEYS = ("input", "truth", "reports", "output")

    @classmethod
    def from_dict(cls, d: dict, env: Optional[Dict[str, str]] = None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        d = dict(d)
        pipe = dict(d.pop("pipeline", {}) or {})
        abstraction = _build(AbstractionConfig, pipe.pop("abstraction", {}) or {}, "pipeline.abstraction")
        pipeline = _build(PipelineConfig, dict(pipe, abstraction=abstraction), "pipeline")
        kw = {"pipeline": pipeline}
        for name, sub in (("synth", SynthConfig), ("sweep", SweepConfig), ("bench", BenchConfig)):
            if name in d:
                kw[name] = _build(sub, d.pop(name) or {}, name)
        vm = d.pop("variable_map", None)
        if vm is None:
            vm = cls().variable_map
        if not isinstance(vm, dict) or any(not isinstance(v, int) or not 0 <= v <= 99 for v in vm.values()):
            raise ConfigError("variable_map must map variable names to integers 0..99")
        if len(set(vm.values())) != len(vm):
            raise ConfigError("variable_map assigns the same index twice")
        kw["variable_map"] = dict(vm)
        paths = d.pop("paths", {}) or {}
        bad = set(paths) - set(cls.PATH_KEYS)
        if bad:
            raise ConfigError(f"unknown keys in paths: {', '.join(sorted(bad))}")
        kw["paths"] = dict(paths)
        for key in ("seed", "minutes_per_sample"):
            if key in d:
                kw[key] = d.pop(key)
        if d:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(d))}")
        cfg = cls(**kw)
        env = os.environ if env is None else env
        if env.get(SEED_ENV, "") != "":
            try:
                cfg.seed = int(env[SEED_ENV])
            except ValueError:
                raise ConfigError(f"{SEED_ENV} must be an integer, got {env[SEED_ENV]!r}") from None
        if not isinstance(cfg.seed, int):
            raise ConfigError("seed must be an integer")
        return cfg

    def to_dict(self) -> dict:
        pipe = dataclasses.asdict(self.pipeline)
        pipe["metric"] = self.pipeline.metric.value
        return {
            "pipeline": pipe,
            "variable_map": dict(self.variable_map),
            "paths": dict(self.paths),
            "seed": self.seed,
            "minutes_per_sample": self.minutes_per_sample,
            "synth": dataclasses.asdict(self.synth),
            "sweep": dataclasses.asdict(self.sweep),
            "bench": dataclasses.asdict(self.bench),
        }


def _build(kind, d: dict, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in dataclasses.fields(kind)}
    bad = set(d) - names
    if bad:
        raise ConfigError(f"unknown keys in {where}: {', '.join(sorted(bad))}")
    try:
        return kind(**d)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid {where}: {e}") from None


def load_config(path: Optional[PathOrFile] = None, env: Optional[Dict[str, str]] = None) -> RunConfig:
    if path is None:
        return RunConfig.from_dict({}, env)
    try:
        if hasattr(path, "read"):
            data = json.load(path)
        else:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    return RunConfig.from_dict(data, env)

"""End-to-end detection: abstraction, encoding, matching, routing, filtering.

:func:`run_entity` is the one-shot run for a single entity: it abstracts the
whole history, builds the numeric string, matches the trailing pattern
against the rest and yields one Found or ColdStart candidate.

:func:`run_online_cycle` is the incremental form. An entity's string only
grows by endpoints that can no longer change: everything stamped before the
latest timestamp seen on all of the entity's variables. After each committed
timestamp the trailing pattern is evaluated. Because commit points depend on
the data alone, splitting the input into any number of time-ordered cycles
gives the same reports as one big cycle.
"""
from __future__ import annotations

import enum
import heapq
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

from .abstraction import (SIGNIFICANT, STRONG, AbstractionConfig, TimePoint, TimePointSeries,
                          TrendSymbol, TrendTracker, abstract_series)
from .encoding import (Endpoint, build_variable_map, decode, encode_endpoint, encode_intervals,
                       split_text_pattern, variable_index)
from .matching import (INF, Metric, SlidingIndex, TextIndex, brute_force_match, MatchQuery,
                       exact_match_hash)

log = logging.getLogger(__name__)

MATCHERS = ("index", "hash", "brute")


class Origin(str, enum.Enum):
    FOUND = "found"
    COLD_START = "cold_start"


@dataclass(frozen=True)
class PipelineConfig:
    pattern_length: int = 5
    alpha: float = 100
    beta: float = 300
    metric: Metric = Metric.L1
    max_candidate_duration: Optional[int] = None
    sample_period: int = 1
    matcher: str = "index"
    index_levels: Optional[int] = 3
    abstraction: AbstractionConfig = field(default_factory=AbstractionConfig)

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        if self.pattern_length < 1:
            raise ValueError("pattern_length must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.matcher not in MATCHERS:
            raise ValueError(f"matcher must be one of {MATCHERS}")
        if self.matcher == "hash" and (self.alpha != 0 or self.beta != 0):
            raise ValueError("the hash matcher only supports alpha = beta = 0")
        if self.sample_period < 1:
            raise ValueError("sample_period must be >= 1")

    @property
    def max_duration(self) -> int:
        if self.max_candidate_duration is not None:
            return self.max_candidate_duration
        return 4 * self.pattern_length * self.sample_period


@dataclass(frozen=True)
class PatternCandidate:
    entity: Hashable
    pattern: Tuple[int, ...]
    time_pattern: Tuple[int, ...]
    origin: Origin

    @property
    def duration(self) -> int:
        return self.time_pattern[-1] - self.time_pattern[0]

    @property
    def symbols(self) -> Tuple[TrendSymbol, ...]:
        return tuple(decode(v)[1] for v in self.pattern)


@dataclass(frozen=True)
class AnomalyReport:
    entity: Hashable
    start: int
    end: int
    origin: Origin
    symbols: Tuple[TrendSymbol, ...] = ()

    @property
    def key(self) -> Tuple[Hashable, int, int]:
        return (self.entity, self.start, self.end)

    @property
    def max_intensity(self) -> int:
        return max((s.intensity for s in self.symbols), default=0)


def passes_filter(symbols: Iterable[TrendSymbol], duration: int, origin: Origin,
                  cfg: PipelineConfig) -> bool:
    syms = set(symbols)
    if not syms & SIGNIFICANT:
        return False
    if origin is Origin.COLD_START and not syms & STRONG:
        return False
    return duration <= cfg.max_duration


def filter_candidates(found: Sequence[PatternCandidate], cold_start: Sequence[PatternCandidate],
                      cfg: PipelineConfig = PipelineConfig()) -> List[AnomalyReport]:
    out = []
    for cand in list(found) + list(cold_start):
        syms = cand.symbols
        if passes_filter(syms, cand.duration, cand.origin, cfg):
            out.append(AnomalyReport(cand.entity, cand.time_pattern[0], cand.time_pattern[-1],
                                     cand.origin, syms))
    return out


def _match_found(text, pattern, cfg: PipelineConfig, index: Optional[TextIndex] = None,
                 setting: Optional[Tuple[float, float, Metric]] = None) -> bool:
    alpha, beta, metric = setting or (cfg.alpha, cfg.beta, cfg.metric)
    if len(text) < len(pattern):
        return False
    if cfg.matcher == "brute":
        return brute_force_match(MatchQuery(list(text), list(pattern), alpha, beta, metric)).found
    if index is None:
        index = TextIndex(text, len(pattern), levels=cfg.index_levels)
    if cfg.matcher == "hash":
        return exact_match_hash(index, pattern)[0]
    return index.query(pattern, alpha, beta, metric).found


def run_entity(series: Iterable[TimePointSeries], cfg: PipelineConfig = PipelineConfig(),
               variable_map: Optional[Mapping[Hashable, int]] = None) -> List[PatternCandidate]:
    """One pass of the detection algorithm for one entity.

    Returns a single candidate for the trailing pattern, or nothing when no
    variable has left its warm-up yet.
    """
    series = list(series)
    if not series:
        return []
    entity = series[0].entity
    if any(s.entity != entity for s in series):
        raise ValueError("run_entity expects the series of a single entity")
    if variable_map is None:
        variable_map = build_variable_map(s.variable for s in series)
    intervals = {s.variable: abstract_series(s, cfg.abstraction) for s in series}
    ns = encode_intervals(entity, intervals, variable_map)
    if len(ns) == 0:
        return []
    split = split_text_pattern(ns, cfg.pattern_length)
    found = (not split.cold_start_only) and _match_found(split.text, split.pattern, cfg)
    return [PatternCandidate(entity, tuple(int(v) for v in split.pattern),
                             tuple(int(t) for t in split.time_pattern),
                             Origin.FOUND if found else Origin.COLD_START)]


# -- online ---------------------------------------------------------------------


class _EntityState:
    def __init__(self, entity, cfg: PipelineConfig):
        self.entity = entity
        self.trackers: Dict[Hashable, TrendTracker] = {}
        self.pending: Dict[Hashable, List[Endpoint]] = {}
        self.string = SlidingIndex(cfg.pattern_length, levels=cfg.index_levels)
        self.stamps: List[int] = []
        self.horizon = -1


@dataclass
class DetectionState:
    """Per-entity online state plus the set of already emitted report keys.

    ``settings`` holds one ``(alpha, beta, metric)`` triple per parallel
    parameter setting; the first one is the configured setting.
    """

    cfg: PipelineConfig = field(default_factory=PipelineConfig)
    variable_map: Dict[Hashable, int] = field(default_factory=dict)
    settings: List[Tuple[float, float, Metric]] = field(default_factory=list)
    entities: Dict[Hashable, _EntityState] = field(default_factory=dict)
    emitted: List[set] = field(default_factory=list)
    reports: List[List[AnomalyReport]] = field(default_factory=list)
    rejected: int = 0

    def __post_init__(self):
        if not self.settings:
            self.settings = [(self.cfg.alpha, self.cfg.beta, self.cfg.metric)]
        self.settings = [(a, b, Metric.parse(m)) for a, b, m in self.settings]
        self.emitted = [set() for _ in self.settings]
        self.reports = [[] for _ in self.settings]

    def _var_index(self, variable) -> int:
        if variable not in self.variable_map:
            self.variable_map[variable] = len(self.variable_map)
        return variable_index(self.variable_map, variable)


def _records(batch) -> Iterable[Tuple[Hashable, Hashable, int, float]]:
    for item in batch:
        if isinstance(item, TimePointSeries):
            for t, v in zip(item.timestamps.tolist(), item.values.tolist()):
                yield item.entity, item.variable, t, v
        elif isinstance(item, TimePoint):
            yield item.entity, item.variable, item.timestamp, item.value
        else:
            e, var, t, v = item
            yield e, var, int(t), float(v)


def run_online_cycle(batch, state: DetectionState) -> List[AnomalyReport]:
    """Ingest one batch of time points and return this cycle's new reports.

    ``batch`` may hold :class:`TimePointSeries`, :class:`TimePoint` or plain
    ``(entity, variable, timestamp, value)`` tuples. Records that are not
    after the last accepted timestamp of their (entity, variable) are
    rejected, counted in ``state.rejected`` and logged.
    """
    by_entity: Dict[Hashable, List[Tuple[int, int, Hashable, float]]] = defaultdict(list)
    for e, var, t, v in _records(batch):
        by_entity[e].append((t, state._var_index(var), var, v))
    before = [len(r) for r in state.reports]
    for entity in sorted(by_entity, key=str):
        es = state.entities.get(entity)
        if es is None:
            es = state.entities[entity] = _EntityState(entity, state.cfg)
        rows = sorted(by_entity[entity], key=lambda r: (r[0], r[1]))
        _ingest(es, rows, state)
    return state.reports[0][before[0]:]


def _ingest(es: _EntityState, rows, state: DetectionState) -> None:
    cfg = state.cfg
    i = 0
    while i < len(rows):
        t = rows[i][0]
        while i < len(rows) and rows[i][0] == t:
            _, vidx, var, value = rows[i]
            i += 1
            tracker = es.trackers.get(var)
            if tracker is None:
                if t <= es.horizon:
                    _reject(state, es.entity, var, t, "new variable behind the commit horizon")
                    continue
                tracker = es.trackers[var] = TrendTracker(cfg.abstraction, es.entity, var)
                es.pending[var] = []
            if tracker.last_timestamp is not None and t <= tracker.last_timestamp:
                _reject(state, es.entity, var, t, "timestamp not increasing")
                continue
            prev = tracker.current()
            closed = tracker.push(t, value)
            cur = tracker.current()
            if closed is not None:
                es.pending[var].append(Endpoint(closed.finish, vidx, closed.symbol, False))
            if cur is not None and (prev is None or cur.begin != prev.begin):
                es.pending[var].append(Endpoint(cur.begin, vidx, cur.symbol, True))
        _commit(es, state)


def _reject(state: DetectionState, entity, var, t, why: str) -> None:
    state.rejected += 1
    log.warning("rejected record %s/%s@%s: %s", entity, var, t, why)


def _commit(es: _EntityState, state: DetectionState) -> None:
    horizon = min(tr.last_timestamp for tr in es.trackers.values()) - 1
    if horizon <= es.horizon:
        return
    es.horizon = horizon
    ready = []
    for var, eps in es.pending.items():
        k = 0
        while k < len(eps) and eps[k].timestamp <= horizon:
            k += 1
        if k:
            ready.append(eps[:k])
            del eps[:k]
    if not ready:
        return
    merged = list(heapq.merge(*ready, key=Endpoint.sort_key))
    j = 0
    while j < len(merged):
        ts = merged[j].timestamp
        while j < len(merged) and merged[j].timestamp == ts:
            es.string.append(encode_endpoint(merged[j]))
            es.stamps.append(ts)
            j += 1
        _evaluate(es, state)


def _evaluate(es: _EntityState, state: DetectionState) -> None:
    cfg = state.cfg
    x = cfg.pattern_length
    pattern = es.string.values[-x:]
    times = es.stamps[-x:]
    symbols = tuple(decode(v)[1] for v in pattern)
    syms = set(symbols)
    duration = times[-1] - times[0]
    # rules that do not depend on the match outcome
    if not syms & SIGNIFICANT or duration > cfg.max_duration:
        return
    has_text = len(es.string) > x
    for k, setting in enumerate(state.settings):
        found = has_text and _match_found(es.string.text, pattern, cfg, es.string.index, setting)
        origin = Origin.FOUND if found else Origin.COLD_START
        if not passes_filter(symbols, duration, origin, cfg):
            continue
        rep = AnomalyReport(es.entity, times[0], times[-1], origin, symbols)
        if rep.key in state.emitted[k]:
            continue
        state.emitted[k].add(rep.key)
        state.reports[k].append(rep)


def detect(series: Iterable, cfg: PipelineConfig = PipelineConfig(),
           variable_map: Optional[Mapping[Hashable, int]] = None) -> List[AnomalyReport]:
    """All reports of the online pipeline over a complete dataset."""
    state = DetectionState(cfg, dict(variable_map or {}))
    run_online_cycle(series, state)
    return list(state.reports[0])


def detect_many(series: Iterable, cfg: PipelineConfig,
                settings: Sequence[Tuple[float, float, Metric]],
                variable_map: Optional[Mapping[Hashable, int]] = None) -> List[List[AnomalyReport]]:
    """Reports for several (alpha, beta, metric) settings from a single replay.

    Equivalent to calling :func:`detect` once per setting; abstraction,
    encoding and the text index are shared.
    """
    state = DetectionState(cfg, dict(variable_map or {}), list(settings))
    run_online_cycle(series, state)
    return [list(r) for r in state.reports]


def with_params(cfg: PipelineConfig, **kw) -> PipelineConfig:
    return replace(cfg, **kw)

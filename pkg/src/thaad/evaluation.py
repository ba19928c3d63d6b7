"""Scoring of reported anomaly ranges against ground-truth events.

A report that overlaps at least one truth interval of its entity (or a
wildcard truth interval) is a true positive, otherwise a false positive.
A truth interval hit by no report is a false negative. Overlap is a
non-empty intersection of closed intervals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Hashable, Iterable, List, NamedTuple, Optional, Sequence

WILDCARD = "*"


@dataclass(frozen=True)
class GroundTruthEvent:
    entity: Hashable
    start: int
    end: int
    label: str = ""

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"truth event start {self.start} > end {self.end}")


@dataclass(frozen=True)
class EvalResult:
    tp: int
    fp: int
    fn: int

    @property
    def tpr(self) -> Optional[float]:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    @property
    def fnr(self) -> Optional[float]:
        tpr = self.tpr
        return None if tpr is None else 1.0 - tpr

    @property
    def f1(self) -> Optional[float]:
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom else None

    def as_row(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "tpr": self.tpr, "fnr": self.fnr, "f1": self.f1}


def overlaps(a_start: int, a_end: int, b_start: int, b_end: int) -> bool:
    return a_start <= b_end and b_start <= a_end


def score(reports: Iterable, truth: Sequence[GroundTruthEvent]) -> EvalResult:
    """``reports`` need ``entity``, ``start`` and ``end`` attributes."""
    hit = [False] * len(truth)
    tp = fp = 0
    by_entity: dict = {}
    for i, ev in enumerate(truth):
        by_entity.setdefault(ev.entity, []).append(i)
    wild = by_entity.get(WILDCARD, [])
    for r in reports:
        matched = False
        candidates = by_entity.get(r.entity, []) if r.entity != WILDCARD else []
        for i in list(candidates) + wild:
            ev = truth[i]
            if overlaps(r.start, r.end, ev.start, ev.end):
                hit[i] = True
                matched = True
        if matched:
            tp += 1
        else:
            fp += 1
    fn = hit.count(False)
    return EvalResult(tp, fp, fn)


SWEEP_HEADER = ("alpha", "beta", "x", "metric", "tp", "fp", "fn", "tpr", "fnr", "f1")


class SweepRow(NamedTuple):
    alpha: float
    beta: float
    x: int
    metric: str
    result: EvalResult

    def as_dict(self) -> dict:
        d = {"alpha": self.alpha, "beta": self.beta, "x": self.x, "metric": self.metric}
        d.update(self.result.as_row())
        return d


def sweep_settings(alphas: Sequence[float], betas: Optional[Sequence[float]] = None,
                   beta_multipliers: Optional[Sequence[float]] = None,
                   metrics: Sequence = ("L1",)) -> List[tuple]:
    """(alpha, beta, metric) triples in output order: alpha, then beta, then metric.

    Give either absolute ``betas`` or ``beta_multipliers`` (beta = m * alpha).
    """
    if (betas is None) == (beta_multipliers is None):
        raise ValueError("give exactly one of betas or beta_multipliers")
    out = []
    for a in alphas:
        if betas is not None:
            bs = list(betas)
        else:
            bs = [math.inf if math.isinf(a) else m * a for m in beta_multipliers]
        for b in bs:
            for m in metrics:
                out.append((a, b, str(getattr(m, "value", m)).upper()))
    return out


def sweep(series, truth: Sequence[GroundTruthEvent], alphas: Sequence[float],
          betas: Optional[Sequence[float]] = None, xs: Sequence[int] = (5,),
          metrics: Sequence = ("L1",), cfg=None,
          beta_multipliers: Optional[Sequence[float]] = None) -> List[SweepRow]:
    """Score the pipeline over a parameter grid.

    Rows are ordered by x, then alpha, beta and metric. All settings sharing
    an ``x`` are evaluated in one replay of the data, which gives the same
    reports as separate runs.
    """
    from .pipeline import PipelineConfig, detect_many

    cfg = cfg or PipelineConfig()
    series = list(series)
    settings = sweep_settings(alphas, betas, beta_multipliers, metrics)
    rows = []
    for x in xs:
        # the hash matcher only covers alpha = beta = 0; the sweep always uses the index
        run_cfg = replace(cfg, pattern_length=int(x), matcher="index" if cfg.matcher == "hash" else cfg.matcher,
                          alpha=0, beta=0)
        per_setting = detect_many(series, run_cfg, settings)
        for (a, b, m), reports in zip(settings, per_setting):
            rows.append(SweepRow(a, b, int(x), m, score(reports, truth)))
    return rows

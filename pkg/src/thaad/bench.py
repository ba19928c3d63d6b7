"""Timing of the brute-force scan vs the range-tree index on growing texts.

The text is the numeric string of one long synthetic entity. One index is
grown by appends and queried whenever its text length reaches the next power
of two, so every size is measured on a prefix of the same string. Patterns
are valid endpoint codes chosen so that they do not occur in the full text.
"""
from __future__ import annotations

import logging
import time
from typing import Dict, List, Optional, Sequence

import numpy as np

from .abstraction import AbstractionConfig, TrendSymbol, abstract_series
from .encoding import encode_intervals
from .matching import Metric, MatchQuery, TextIndex, brute_force_match
from .synthetic import DAY, generate_synthetic

log = logging.getLogger(__name__)


def workload_string(min_length: int, seed: int = 0, cfg: AbstractionConfig = AbstractionConfig()) -> List[int]:
    """Numeric string of one synthetic entity, at least ``min_length`` long."""
    days = 8
    while True:
        series, _ = generate_synthetic(seed, n_entities=1, duration=days * DAY,
                                       anomalies=max(1, days // 7), include_total=False)
        s = series[0]
        ns = encode_intervals(s.entity, {s.variable: abstract_series(s, cfg)}, {s.variable: 0})
        if len(ns) >= min_length:
            return [int(v) for v in ns.values[:min_length]]
        days = int(days * min_length / max(len(ns), 1) * 1.1) + 1


def non_matching_patterns(text: Sequence[int], x: int, alpha: float, beta: float,
                          metric: Metric, count: int, seed: int = 0) -> List[List[int]]:
    """Random valid codes with no (alpha, beta)-occurrence in ``text``."""
    rng = np.random.default_rng(seed)
    index = TextIndex(text, x)
    out: List[List[int]] = []
    for _ in range(1000 * count):
        opens = rng.integers(1, 3, size=x)
        syms = rng.integers(0, len(TrendSymbol), size=x)
        p = [int(o * 10000 + s * 100) for o, s in zip(opens, syms)]
        if not index.query(p, alpha, beta, metric).found:
            out.append(p)
            if len(out) == count:
                return out
    raise RuntimeError("could not find enough non-matching patterns")


def run_bench(min_log2: int = 10, max_log2: int = 17, x: int = 5, alpha: float = 100,
              beta: float = 300, metric=Metric.L1, queries: int = 20, seed: int = 0,
              index_levels: Optional[int] = 3, oracle_max_log2: Optional[int] = None,
              oracle_queries: int = 2) -> List[Dict]:
    """One row per text length n = 2**k: median query time of each matcher in ns.

    ``oracle_ns`` is measured on ``oracle_queries`` of the patterns only and
    is left at 0 above ``oracle_max_log2``.
    """
    metric = Metric.parse(metric)
    sizes = [2 ** k for k in range(min_log2, max_log2 + 1)]
    text = workload_string(sizes[-1] + x, seed)
    patterns = non_matching_patterns(text[:sizes[-1]], x, alpha, beta, metric, queries, seed)
    index = TextIndex((), x, levels=index_levels)
    rows = []
    for n in sizes:
        index.extend(text[len(index.text):n])
        times = []
        for p in patterns:
            t0 = time.perf_counter_ns()
            res = index.query(p, alpha, beta, metric)
            times.append(time.perf_counter_ns() - t0)
            assert not res.found
        oracle_ns = 0
        if oracle_max_log2 is None or n <= 2 ** oracle_max_log2:
            ot = []
            for p in patterns[:oracle_queries]:
                t0 = time.perf_counter_ns()
                res = brute_force_match(MatchQuery(index.text, p, alpha, beta, metric))
                ot.append(time.perf_counter_ns() - t0)
                assert not res.found
            oracle_ns = int(np.median(ot))
        rows.append({"n": n, "x": x, "alpha": alpha, "beta": beta,
                     "oracle_ns": oracle_ns, "index_ns": int(np.median(times))})
        log.info("n=%d index %.1f us oracle %.1f ms (distinct windows %d)", n,
                 rows[-1]["index_ns"] / 1e3, oracle_ns / 1e6, index.n_distinct)
    return rows


def fit_exponent(rows: Sequence[Dict], key: str = "index_ns") -> float:
    """Slope of log(time) against log(n)."""
    pts = [(r["n"], r[key]) for r in rows if r[key] > 0]
    if len(pts) < 2:
        raise ValueError("need at least two timed sizes")
    n, t = np.log(np.array(pts, dtype=np.float64)).T
    return float(np.polyfit(n, t, 1)[0])

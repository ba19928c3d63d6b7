"""(alpha, beta)-approximate matching of a pattern against a text.

A pattern of length ``x`` occurs at shift ``t`` when every aligned pair
differs by at most ``alpha`` and the aggregate distance (L1 sum or L2 norm)
is at most ``beta``. Three matchers are provided:

* :func:`brute_force_shifts` scans every shift; it is the reference oracle.
* :func:`exact_match_hash` looks windows up in a multiset hash table
  (``alpha = beta = 0`` only).
* :class:`TextIndex` views the text as ``n - x + 1`` points in x-dimensional
  space and answers queries with multi-level range trees: the alpha cube is
  decomposed into canonical subsets, then the beta constraint is applied on
  those subsets (through rotated trees when ``x == 2`` under L1, per point
  otherwise).

The index is insert-only and dynamic through the logarithmic method: new
distinct windows collect in a small buffer, which is frozen into a static
block; equal-size blocks are merged and rebuilt.
"""
from __future__ import annotations

import enum
import math
import threading
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .rangetree import Collector, StaticBlock

INF = math.inf


class Metric(str, enum.Enum):
    L1 = "L1"
    L2 = "L2"

    @classmethod
    def parse(cls, value) -> "Metric":
        if isinstance(value, Metric):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown metric {value!r}; expected L1 or L2") from None


class MatchError(ValueError):
    pass


class InvalidShiftError(MatchError):
    pass


class InvalidQueryError(MatchError):
    pass


class MatchResult(NamedTuple):
    found: bool
    count: int
    first_shift: Optional[int]


@dataclass(frozen=True)
class MatchQuery:
    text: Sequence[int]
    pattern: Sequence[int]
    alpha: float = INF
    beta: float = INF
    metric: Metric = Metric.L1

    def __post_init__(self):
        object.__setattr__(self, "metric", Metric.parse(self.metric))
        _check_bounds(self.alpha, self.beta)
        if len(self.pattern) < 1:
            raise InvalidQueryError("pattern must not be empty")


def _check_bounds(alpha, beta) -> None:
    if alpha < 0 or beta < 0 or math.isnan(alpha) or math.isnan(beta):
        raise InvalidQueryError(f"alpha and beta must be non-negative, got {alpha}, {beta}")


def _within_beta(l1: int, sq: int, beta: float, metric: Metric) -> bool:
    if metric is Metric.L1:
        return l1 <= beta
    return math.sqrt(sq) <= beta


def occurs_at(text: Sequence[int], pattern: Sequence[int], shift: int,
              alpha: float = INF, beta: float = INF, metric: Metric = Metric.L1) -> bool:
    metric = Metric.parse(metric)
    x = len(pattern)
    if not 0 <= shift <= len(text) - x:
        raise InvalidShiftError(f"shift {shift} outside [0, {len(text) - x}]")
    l1 = 0
    sq = 0
    for j in range(x):
        d = abs(int(text[shift + j]) - int(pattern[j]))
        if d > alpha:
            return False
        l1 += d
        sq += d * d
    return _within_beta(l1, sq, beta, metric)


def brute_force_shifts(q: MatchQuery) -> List[int]:
    """Every shift at which the pattern occurs, ascending."""
    n, x = len(q.text), len(q.pattern)
    if n < x:
        return []
    return [t for t in range(n - x + 1)
            if occurs_at(q.text, q.pattern, t, q.alpha, q.beta, q.metric)]


def brute_force_match(q: MatchQuery) -> MatchResult:
    shifts = brute_force_shifts(q)
    return MatchResult(bool(shifts), len(shifts), shifts[0] if shifts else None)


def _beta_is_slack(x: int, alpha: float, beta: float, metric: Metric) -> bool:
    """True when every point of the alpha cube already satisfies beta."""
    if beta == INF:
        return True
    if alpha == INF:
        return False
    if metric is Metric.L1:
        return x * alpha <= beta
    return math.sqrt(x * alpha * alpha) <= beta


class TextIndex:
    """Sliding-window point set of a text plus range trees over it.

    Windows are a multiset: identical windows share one point that carries a
    multiplicity and its smallest shift.

    ``levels`` caps how many coordinates get a tree level (default: all of
    them); remaining coordinates are verified per point inside the canonical
    subsets. Reads and appends are serialised by a lock, so readers always see
    a consistent state.
    """

    def __init__(self, text: Sequence[int] = (), x: int = 1, *, levels: Optional[int] = None,
                 leaf_size: int = 16, buffer_size: int = 32):
        if x < 1:
            raise InvalidQueryError("window length x must be >= 1")
        self.x = int(x)
        self.levels = self.x if levels is None else max(1, min(int(levels), self.x))
        self.leaf_size = leaf_size
        self.buffer_size = buffer_size
        self.text: List[int] = []
        self._table: Dict[Tuple[int, ...], int] = {}
        self._coords = np.zeros((64, self.x), dtype=np.int64)
        self._weight = np.zeros(64, dtype=np.int64)
        self._first = np.zeros(64, dtype=np.int64)
        self._n_points = 0
        self._blocks: List[StaticBlock] = []
        self._buffer: List[int] = []
        self._lock = threading.RLock()
        text = [int(v) for v in text]
        if text:
            self.text = text
            for shift in range(len(text) - self.x + 1):
                self._register(tuple(text[shift:shift + self.x]), shift)
            if self._buffer:
                self._blocks.append(self._freeze(self._buffer))
                self._buffer = []

    # -- construction -----------------------------------------------------

    @property
    def n_windows(self) -> int:
        return max(0, len(self.text) - self.x + 1)

    @property
    def n_distinct(self) -> int:
        return self._n_points

    def _grow(self) -> None:
        cap = len(self._weight) * 2
        for name in ("_coords", "_weight", "_first"):
            old = getattr(self, name)
            new = np.zeros((cap,) + old.shape[1:], dtype=old.dtype)
            new[:len(old)] = old
            setattr(self, name, new)

    def _register(self, window: Tuple[int, ...], shift: int) -> None:
        pid = self._table.get(window)
        if pid is not None:
            self._weight[pid] += 1
            return
        pid = self._n_points
        if pid == len(self._weight):
            self._grow()
        self._coords[pid] = window
        self._weight[pid] = 1
        self._first[pid] = shift
        self._table[window] = pid
        self._n_points += 1
        self._buffer.append(pid)

    def _freeze(self, pids) -> StaticBlock:
        return StaticBlock(np.asarray(pids, dtype=np.int64), self._coords, self.levels, self.leaf_size)

    def append(self, value: int) -> None:
        """Append one value to the text, inserting the window it completes."""
        with self._lock:
            self.text.append(int(value))
            shift = len(self.text) - self.x
            if shift < 0:
                return
            self._register(tuple(self.text[shift:]), shift)
            if len(self._buffer) >= self.buffer_size:
                self._blocks.append(self._freeze(self._buffer))
                self._buffer = []
                while len(self._blocks) >= 2 and len(self._blocks[-2]) <= len(self._blocks[-1]):
                    b = self._blocks.pop()
                    a = self._blocks.pop()
                    self._blocks.append(self._freeze(np.concatenate([a.pids, b.pids])))

    def extend(self, values: Sequence[int]) -> None:
        for v in values:
            self.append(v)

    # -- queries ------------------------------------------------------------

    def _validate(self, pattern) -> np.ndarray:
        p = np.asarray(pattern, dtype=np.int64).reshape(-1)
        if len(p) != self.x:
            raise InvalidQueryError(f"pattern length {len(p)} != index dimension {self.x}")
        return p

    def query(self, pattern: Sequence[int], alpha: float = INF, beta: float = INF,
              metric: Metric = Metric.L1) -> MatchResult:
        metric = Metric.parse(metric)
        _check_bounds(alpha, beta)
        p = self._validate(pattern)
        with self._lock:
            if self._n_points == 0:
                return MatchResult(False, 0, None)
            slack = _beta_is_slack(self.x, alpha, beta, metric)
            pf = p.astype(np.float64)
            boxes = {"cube": (pf - alpha, pf + alpha)}
            use_tail = False
            if not slack and metric is Metric.L1 and self.levels == 2 and self.x == 2:
                a, b = float(p[0] + p[1]), float(p[0] - p[1])
                boxes["rot"] = ((a - beta, b - beta), (a + beta, b + beta))
                use_tail = True
            exact_chains = {"rot"}
            if slack and self.levels == self.x:
                exact_chains.add("cube")
            q = Collector(boxes, use_tail, exact_chains)
            exact: List[np.ndarray] = []
            check: List[np.ndarray] = []
            for block in self._blocks:
                block.collect(q, exact, check)
            if self._buffer:
                check.append(np.asarray(self._buffer, dtype=np.int64))
            return self._tally(p, alpha, beta, metric, exact, check)

    def _tally(self, p, alpha, beta, metric, exact, check) -> MatchResult:
        count = 0
        first = None
        if exact:
            ids = np.concatenate(exact)
            if len(ids):
                count += int(self._weight[ids].sum())
                first = int(self._first[ids].min())
        if check:
            ids = np.concatenate(check)
            if len(ids):
                d = np.abs(self._coords[ids] - p)
                ok = (d <= alpha).all(axis=1)
                if metric is Metric.L1:
                    ok &= d.sum(axis=1) <= beta
                else:
                    ok &= np.sqrt((d * d).sum(axis=1)) <= beta
                ids = ids[ok]
                if len(ids):
                    count += int(self._weight[ids].sum())
                    f = int(self._first[ids].min())
                    first = f if first is None else min(first, f)
        return MatchResult(count > 0, count, first)

    def exact_count(self, pattern: Sequence[int]) -> int:
        p = self._validate(pattern)
        with self._lock:
            pid = self._table.get(tuple(int(v) for v in p))
            return 0 if pid is None else int(self._weight[pid])

    def windows(self) -> List[Tuple[int, ...]]:
        """All window points in shift order (with repeats)."""
        return [tuple(self.text[s:s + self.x]) for s in range(self.n_windows)]

    def point_multiset(self) -> Dict[Tuple[int, ...], int]:
        with self._lock:
            return {w: int(self._weight[pid]) for w, pid in self._table.items()}

    def structure_size(self) -> int:
        return sum(b.tree.size() for b in self._blocks) + len(self._buffer)


class SlidingIndex:
    """A growing string whose last ``x`` values form the pattern.

    Every append pushes the value that leaves the pattern region into the
    text index, so the index always holds exactly the windows of the text.
    """

    def __init__(self, x: int, values: Sequence[int] = (), **index_kw):
        self.x = int(x)
        self.values: List[int] = [int(v) for v in values]
        n_text = max(0, len(self.values) - self.x)
        self.index = TextIndex(self.values[:n_text], self.x, **index_kw)

    def append(self, value: int) -> None:
        self.values.append(int(value))
        if len(self.values) > self.x:
            self.index.append(self.values[-self.x - 1])

    @property
    def text(self) -> List[int]:
        return self.index.text

    @property
    def pattern(self) -> List[int]:
        return self.values[-self.x:]

    def __len__(self) -> int:
        return len(self.values)

    def query(self, alpha: float = INF, beta: float = INF, metric: Metric = Metric.L1) -> MatchResult:
        if len(self.values) < self.x:
            return MatchResult(False, 0, None)
        return self.index.query(self.pattern, alpha, beta, metric)


def build_index(text: Sequence[int], x: int, **kw) -> TextIndex:
    return TextIndex(text, x, **kw)


def query_match(index: TextIndex, pattern: Sequence[int], alpha: float = INF,
                beta: float = INF, metric: Metric = Metric.L1) -> MatchResult:
    return index.query(pattern, alpha, beta, metric)


def append_symbol(index, value: int):
    """Grow the string tracked by ``index`` by one value; returns the index."""
    index.append(value)
    return index


def exact_match_hash(index: TextIndex, pattern: Sequence[int]) -> Tuple[bool, int]:
    count = index.exact_count(pattern)
    return count > 0, count

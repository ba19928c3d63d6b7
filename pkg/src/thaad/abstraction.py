"""Gradient temporal abstraction.

Turns per-(entity, variable) time-point series into symbolic trend intervals.
Each point with a full history window gets a trend symbol from two numbers:

* ``slope``: mean signed angle of consecutive steps over the window,
* ``relation``: the current value divided by the mean of the preceding window.

Runs of equal symbols are concatenated into :class:`SymbolicTimeInterval`.
"""
from __future__ import annotations

import enum
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable, Iterator, List, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)


class AbstractionError(ValueError):
    """Base class for invalid abstraction input."""


class InvalidInputError(AbstractionError):
    pass


class InsufficientHistoryError(AbstractionError):
    pass


class DegenerateInputError(AbstractionError):
    pass


class TrendSymbol(enum.IntEnum):
    """Seven trend symbols; the integer value is the two-digit encoding code."""

    D_H = 0
    D_M = 1
    D_L = 2
    S = 3
    I_L = 4
    I_M = 5
    I_H = 6

    @property
    def label(self) -> str:
        return self.name.replace("_", "-")

    @classmethod
    def from_label(cls, label: str) -> "TrendSymbol":
        try:
            return cls[label.strip().replace("-", "_")]
        except KeyError:
            raise ValueError(f"unknown trend symbol {label!r}") from None

    def mirror(self) -> "TrendSymbol":
        return TrendSymbol(6 - self.value)

    @property
    def intensity(self) -> int:
        """0 for S, 1/2/3 for Low/Medium/High increase or decrease."""
        return abs(self.value - 3)

    def __str__(self) -> str:
        return self.label


SIGNIFICANT = frozenset({TrendSymbol.I_M, TrendSymbol.I_H, TrendSymbol.D_M, TrendSymbol.D_H})
STRONG = frozenset({TrendSymbol.I_H, TrendSymbol.D_H})


@dataclass(frozen=True)
class TimePoint:
    entity: Hashable
    variable: Hashable
    timestamp: int
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidInputError(f"non-finite value {self.value!r} at t={self.timestamp}")
        if self.timestamp < 0:
            raise InvalidInputError(f"negative timestamp {self.timestamp}")


@dataclass(frozen=True, eq=False)
class TimePointSeries:
    """Points of one (entity, variable), strictly increasing in time."""

    entity: Hashable
    variable: Hashable
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        vs = np.asarray(self.values, dtype=np.float64)
        if ts.shape != vs.shape or ts.ndim != 1:
            raise InvalidInputError("timestamps and values must be 1-D and of equal length")
        if not np.all(np.isfinite(vs)):
            raise InvalidInputError("series contains non-finite values")
        if ts.size and ts[0] < 0:
            raise InvalidInputError("negative timestamp")
        if np.any(np.diff(ts) <= 0):
            raise InvalidInputError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vs)

    @classmethod
    def from_points(cls, points: Iterable[TimePoint]) -> "TimePointSeries":
        """Series from points of one (entity, variable), in any order."""
        points = sorted(points, key=lambda p: p.timestamp)
        if not points:
            raise InvalidInputError("cannot infer entity/variable from an empty point list")
        entity, variable = points[0].entity, points[0].variable
        if any(p.entity != entity or p.variable != variable for p in points):
            raise InvalidInputError("all points must share entity and variable")
        return cls(entity, variable,
                   np.array([p.timestamp for p in points], dtype=np.int64),
                   np.array([p.value for p in points], dtype=np.float64))

    @property
    def points(self) -> List[TimePoint]:
        return [TimePoint(self.entity, self.variable, int(t), float(v))
                for t, v in zip(self.timestamps, self.values)]

    def __len__(self) -> int:
        return len(self.timestamps)

    def __eq__(self, other):
        if not isinstance(other, TimePointSeries):
            return NotImplemented
        return (self.entity == other.entity and self.variable == other.variable
                and np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.values, other.values))


@dataclass(frozen=True)
class SymbolicTimeInterval:
    entity: Hashable
    variable: Hashable
    begin: int
    finish: int
    symbol: TrendSymbol

    def __post_init__(self):
        if self.begin > self.finish:
            raise InvalidInputError(f"interval begin {self.begin} > finish {self.finish}")


@dataclass(frozen=True)
class AbstractionConfig:
    window: int = 5
    high_slope_thresh: float = 45.0
    low_slope_thresh: float = 15.0
    high_relation_thresh: float = 2.0
    low_relation_thresh: float = 1.5
    stable_relation_epsilon: float = 0.05

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 2:
            raise ValueError("window must be an integer >= 2")
        if not 0 < self.low_slope_thresh < self.high_slope_thresh < 90:
            raise ValueError("need 0 < low_slope_thresh < high_slope_thresh < 90")
        if not 1 < self.low_relation_thresh < self.high_relation_thresh:
            raise ValueError("need 1 < low_relation_thresh < high_relation_thresh")
        if not 0 <= self.stable_relation_epsilon < self.low_relation_thresh - 1:
            raise ValueError("need 0 <= stable_relation_epsilon < low_relation_thresh - 1")


def angle(y1: float, y2: float) -> float:
    """Angle in degrees between the x axis and the segment (0, y1)-(1, y2).

    Equal to ``acos(1 / sqrt((y2 - y1)**2 + 1))``; computed through ``atan``
    which keeps full precision for large steps.
    """
    if not (math.isfinite(y1) and math.isfinite(y2)):
        raise InvalidInputError("angle needs finite values")
    return math.degrees(math.atan(abs(y2 - y1)))


def _signed_angle(y1: float, y2: float) -> float:
    a = angle(y1, y2)
    return -a if y1 > y2 else a


def slope(values: Sequence[float]) -> float:
    """Absolute mean of the signed step angles over ``values``.

    A step is negative when the earlier value is strictly greater.
    """
    if len(values) < 2:
        raise InsufficientHistoryError("slope needs at least two values")
    total = math.fsum(_signed_angle(a, b) for a, b in zip(values[:-1], values[1:]))
    return abs(total / (len(values) - 1))


def relation(suffix: Sequence[float], cur_value: float,
             cfg: Optional[AbstractionConfig] = None) -> float:
    """``cur_value / mean(suffix)``.

    Non-positive means have no meaningful ratio. With ``cfg`` given they are
    mapped onto the relation scale (equal -> 1, above -> the high threshold,
    below -> its inverse); without it they raise :class:`DegenerateInputError`.
    A non-positive ratio under a positive mean is a maximal decrease.
    """
    if len(suffix) == 0:
        raise InsufficientHistoryError("relation needs a non-empty suffix")
    if not math.isfinite(cur_value):
        raise InvalidInputError("non-finite current value")
    mean = math.fsum(suffix) / len(suffix)
    if mean > 0:
        ratio = cur_value / mean
        if ratio > 0:
            return ratio
        if cfg is None:
            raise DegenerateInputError("non-positive relation")
        return 1.0 / cfg.high_relation_thresh
    if cfg is None:
        raise DegenerateInputError(f"suffix mean {mean} is not positive")
    if cur_value == mean:
        return 1.0
    if cur_value > mean:
        return cfg.high_relation_thresh
    return 1.0 / cfg.high_relation_thresh


def _band(value: float, high: float, low: float) -> int:
    if value >= high:
        return 2
    if value >= low:
        return 1
    return 0


# (slope band, relation band) -> intensity; 0 means S. Bands: 0 low, 1 medium, 2 high.
_INTENSITY = {
    (2, 2): 3, (2, 1): 2, (2, 0): 1,
    (1, 2): 2, (1, 1): 2, (1, 0): 1,
}


def classify_symbol(slope_value: float, relation_value: float,
                    cfg: AbstractionConfig = AbstractionConfig()) -> TrendSymbol:
    eps = cfg.stable_relation_epsilon
    if relation_value > 1 + eps:
        sign, r_eff = 1, relation_value
    elif relation_value < 1 / (1 + eps):
        sign, r_eff = -1, 1 / relation_value
    else:
        return TrendSymbol.S
    s_band = _band(slope_value, cfg.high_slope_thresh, cfg.low_slope_thresh)
    if s_band == 0:
        return TrendSymbol.S
    r_band = _band(r_eff, cfg.high_relation_thresh, cfg.low_relation_thresh)
    return TrendSymbol(3 + sign * _INTENSITY[s_band, r_band])


class TrendTracker:
    """Online gradient abstraction of one series.

    Feed points in time order with :meth:`push`; it returns the interval that
    was closed by the new point, if any. :meth:`current` is the still-open run.
    """

    def __init__(self, cfg: AbstractionConfig = AbstractionConfig(),
                 entity: Hashable = None, variable: Hashable = None):
        self.cfg = cfg
        self.entity = entity
        self.variable = variable
        self._values: deque = deque(maxlen=cfg.window + 1)
        self._steps: deque = deque(maxlen=cfg.window)
        self._last_ts: Optional[int] = None
        self._run: Optional[list] = None  # [begin, finish, symbol]
        self.n_points = 0

    def symbol_for_next(self, value: float) -> Optional[TrendSymbol]:
        """Symbol the next value would get, or None during warm-up."""
        if len(self._values) < self.cfg.window:
            return None
        history = list(self._values)[-self.cfg.window:]
        steps = list(self._steps)[-(self.cfg.window - 1):]
        total = math.fsum(steps + [_signed_angle(history[-1], value)])
        s = abs(total / self.cfg.window)
        r = relation(history, value, self.cfg)
        return classify_symbol(s, r, self.cfg)

    def push(self, timestamp: int, value: float) -> Optional[SymbolicTimeInterval]:
        if self._last_ts is not None and timestamp <= self._last_ts:
            raise InvalidInputError(
                f"timestamp {timestamp} not after {self._last_ts} for {self.entity}/{self.variable}")
        if not math.isfinite(value):
            raise InvalidInputError(f"non-finite value at t={timestamp}")
        sym = self.symbol_for_next(value)
        if self._values:
            self._steps.append(_signed_angle(self._values[-1], value))
        self._values.append(value)
        self._last_ts = timestamp
        self.n_points += 1
        if sym is None:
            return None
        if self._run is not None and self._run[2] == sym:
            self._run[1] = timestamp
            return None
        closed = self._close()
        self._run = [timestamp, timestamp, sym]
        return closed

    def _close(self) -> Optional[SymbolicTimeInterval]:
        if self._run is None:
            return None
        b, f, sym = self._run
        return SymbolicTimeInterval(self.entity, self.variable, b, f, sym)

    def current(self) -> Optional[SymbolicTimeInterval]:
        return self._close()

    @property
    def last_timestamp(self) -> Optional[int]:
        return self._last_ts


def iter_symbols(values: Sequence[float], cfg: AbstractionConfig = AbstractionConfig()
                 ) -> Iterator[Optional[TrendSymbol]]:
    """Per-point symbols (None during warm-up), straight from the definitions."""
    t = cfg.window
    for i in range(len(values)):
        if i < t:
            yield None
            continue
        s = slope(values[i - t:i + 1])
        r = relation(values[i - t:i], values[i], cfg)
        yield classify_symbol(s, r, cfg)


def abstract_series(series: TimePointSeries,
                    cfg: AbstractionConfig = AbstractionConfig()) -> List[SymbolicTimeInterval]:
    """Symbolic time intervals of a whole series.

    The first ``cfg.window`` points only fill the history. Shorter series give
    an empty list and a logged warning.
    """
    if len(series) <= cfg.window:
        log.warning("series %s/%s has %d points; %d needed before the first symbol",
                    series.entity, series.variable, len(series), cfg.window + 1)
        return []
    tracker = TrendTracker(cfg, series.entity, series.variable)
    out = []
    for ts, v in zip(series.timestamps.tolist(), series.values.tolist()):
        closed = tracker.push(ts, v)
        if closed is not None:
            out.append(closed)
    last = tracker.current()
    if last is not None:
        out.append(last)
    return out

"""Endpoints, event strings and their five-digit numeric encoding.

An encoded endpoint is ``open_digit * 10000 + symbol_code * 100 + variable``
with ``open_digit`` 2 for an interval begin and 1 for a finish, so adjacent
trend symbols of the same variable differ by exactly 100.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Mapping, NamedTuple, Sequence, Tuple

import numpy as np

from .abstraction import SymbolicTimeInterval, TrendSymbol

MIN_CODE = 10000
MAX_CODE = 29999


class EncodingError(ValueError):
    pass


class EncodingCapacityError(EncodingError):
    """Variable index missing from the map or wider than two digits."""


class MalformedCodeError(EncodingError):
    pass


@dataclass(frozen=True)
class Endpoint:
    timestamp: int
    variable: int
    symbol: TrendSymbol
    open: bool

    def __post_init__(self):
        if not 0 <= self.variable <= 99:
            raise EncodingCapacityError(f"variable index {self.variable} does not fit two digits")

    def sort_key(self) -> Tuple[int, int, int, int]:
        # begin before finish on ties; only zero-length intervals tie on (time, variable)
        return (self.timestamp, self.variable, int(self.symbol), 0 if self.open else 1)

    @property
    def code(self) -> int:
        return encode_endpoint(self)


@dataclass(frozen=True)
class EventString:
    entity: Hashable
    endpoints: Tuple[Endpoint, ...]

    def __len__(self) -> int:
        return len(self.endpoints)


@dataclass(frozen=True, eq=False)
class NumericString:
    entity: Hashable
    values: np.ndarray
    timestamps: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, NumericString):
            return NotImplemented
        return (self.entity == other.entity and np.array_equal(self.values, other.values)
                and np.array_equal(self.timestamps, other.timestamps))


def split_interval(sti: SymbolicTimeInterval, variable_index: int) -> Tuple[Endpoint, Endpoint]:
    return (Endpoint(sti.begin, variable_index, sti.symbol, True),
            Endpoint(sti.finish, variable_index, sti.symbol, False))


def split_intervals(intervals: Iterable[SymbolicTimeInterval], variable_index: int) -> List[Endpoint]:
    out: List[Endpoint] = []
    for sti in intervals:
        out.extend(split_interval(sti, variable_index))
    return out


def merge_endpoints(per_variable: Sequence[Sequence[Endpoint]], entity: Hashable = None) -> EventString:
    """k-way merge of internally sorted endpoint lists into one event string."""
    merged = heapq.merge(*per_variable, key=Endpoint.sort_key)
    return EventString(entity, tuple(merged))


def encode_endpoint(ep: Endpoint) -> int:
    return (2 if ep.open else 1) * 10000 + int(ep.symbol) * 100 + ep.variable


def encode(ds: EventString) -> NumericString:
    values = np.fromiter((encode_endpoint(ep) for ep in ds.endpoints), dtype=np.int64,
                         count=len(ds.endpoints))
    stamps = np.fromiter((ep.timestamp for ep in ds.endpoints), dtype=np.int64,
                         count=len(ds.endpoints))
    return NumericString(ds.entity, values, stamps)


def decode(value: int) -> Tuple[bool, TrendSymbol, int]:
    """Inverse of :func:`encode_endpoint`: ``(open, symbol, variable_index)``."""
    value = int(value)
    if not MIN_CODE <= value <= MAX_CODE:
        raise MalformedCodeError(f"{value} is outside [{MIN_CODE}, {MAX_CODE}]")
    open_digit, rest = divmod(value, 10000)
    sym, var = divmod(rest, 100)
    if sym > 6:
        raise MalformedCodeError(f"{value} carries symbol code {sym}")
    return open_digit == 2, TrendSymbol(sym), var


def build_variable_map(variables: Iterable[Hashable]) -> Dict[Hashable, int]:
    """First-seen order variable map."""
    out: Dict[Hashable, int] = {}
    for v in variables:
        if v not in out:
            out[v] = len(out)
    if len(out) > 100:
        raise EncodingCapacityError(f"{len(out)} variables; at most 100 can be encoded")
    return out


def variable_index(variable_map: Mapping[Hashable, int], variable: Hashable) -> int:
    try:
        idx = variable_map[variable]
    except KeyError:
        raise EncodingCapacityError(f"variable {variable!r} is not in the variable map") from None
    if not 0 <= idx <= 99:
        raise EncodingCapacityError(f"variable {variable!r} maps to {idx}, outside 0..99")
    return idx


def encode_intervals(entity: Hashable, intervals_by_variable: Mapping[Hashable, Sequence[SymbolicTimeInterval]],
                     variable_map: Mapping[Hashable, int]) -> NumericString:
    """Split, merge and encode all intervals of one entity."""
    lists = [split_intervals(stis, variable_index(variable_map, var))
             for var, stis in intervals_by_variable.items()]
    return encode(merge_endpoints(lists, entity))


class TextPatternSplit(NamedTuple):
    text: np.ndarray
    pattern: np.ndarray
    time_pattern: np.ndarray
    cold_start_only: bool


def split_text_pattern(s: NumericString, x: int) -> TextPatternSplit:
    """Text is everything but the last ``x`` values; the pattern is those ``x``.

    With ``len(s) <= x`` there is no text: the whole string is returned as the
    pattern and ``cold_start_only`` is set.
    """
    if x < 1:
        raise ValueError("pattern length must be >= 1")
    n = len(s)
    if n <= x:
        return TextPatternSplit(s.values[:0], s.values.copy(), s.timestamps.copy(), True)
    return TextPatternSplit(s.values[:n - x], s.values[n - x:], s.timestamps[n - x:], False)

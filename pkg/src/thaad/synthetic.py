"""Synthetic per-minute DNS-like traffic with injected anomalies.

Each entity follows a daily two-level profile (a low night/morning level and
a high afternoon/evening level joined by smooth cosine ramps) times bounded
multiplicative noise. Anomalies multiply an entity's traffic over a window:
spikes by ``magnitude``, dips by ``1 / magnitude``. The default ``burst``
shape jumps at the window start, holds for half the window and then relaxes
geometrically back to the baseline by the window end; ``square`` keeps the
full factor for the whole window.

An optional wildcard entity ``"*"`` carries the total over all entities.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .abstraction import TimePointSeries
from .evaluation import GroundTruthEvent

DAY = 1440
WILDCARD = "*"
TOTAL_VARIABLE = "total"
SENT_VARIABLE = "sent"


class SyntheticSpecError(ValueError):
    pass


@dataclass(frozen=True)
class AnomalySpec:
    entity: str
    start: int
    duration: int
    magnitude: float = 3.0
    kind: str = "spike"
    shape: str = "burst"

    @property
    def end(self) -> int:
        return self.start + self.duration - 1

    def factors(self) -> np.ndarray:
        n = self.duration
        m = self.magnitude if self.kind == "spike" else 1.0 / self.magnitude
        f = np.full(n, m)
        if self.shape == "burst":
            hold = (n + 1) // 2
            k = np.arange(1, n - hold + 1)
            f[hold:] = m ** (1 - k / (n - hold))
        return f


@dataclass(frozen=True)
class TrafficProfile:
    high: float = 200_000.0
    low: float = 75_000.0
    high_start: int = 840  # 14:00
    high_end: int = 1440   # midnight
    ramp: int = 180
    noise: float = 0.05
    scale_range: Tuple[float, float] = (0.5, 1.5)

    def baseline(self, minutes: np.ndarray) -> np.ndarray:
        tod = np.mod(minutes, DAY).astype(np.float64)
        level = np.maximum(self._level(tod), self._level(tod + DAY))
        return self.low + (self.high - self.low) * level

    def _level(self, tau: np.ndarray) -> np.ndarray:
        half = self.ramp / 2
        up = _smoothstep((tau - self.high_start + half) / self.ramp)
        down = _smoothstep((tau - self.high_end + half) / self.ramp)
        return up * (1 - down)


def _smoothstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * u)


def _validate(anomalies: Sequence[AnomalySpec], entities: Sequence[str], duration: int) -> None:
    by_entity: Dict[str, List[AnomalySpec]] = {}
    for a in anomalies:
        if a.entity not in entities:
            raise SyntheticSpecError(f"anomaly for unknown entity {a.entity!r}")
        if a.duration < 1 or a.start < 0 or a.end >= duration:
            raise SyntheticSpecError(f"anomaly window [{a.start}, {a.end}] outside [0, {duration})")
        if a.kind not in ("spike", "dip"):
            raise SyntheticSpecError(f"unknown anomaly kind {a.kind!r}")
        if a.shape not in ("burst", "square"):
            raise SyntheticSpecError(f"unknown anomaly shape {a.shape!r}")
        if a.magnitude <= 0:
            raise SyntheticSpecError("anomaly magnitude must be positive")
        by_entity.setdefault(a.entity, []).append(a)
    for entity, items in by_entity.items():
        items.sort(key=lambda a: a.start)
        for a, b in zip(items, items[1:]):
            if b.start <= a.end:
                raise SyntheticSpecError(
                    f"overlapping anomalies for {entity}: [{a.start}, {a.end}] and [{b.start}, {b.end}]")


def entity_names(n_entities: int) -> List[str]:
    return [f"10.0.{i // 250}.{i % 250 + 1}" for i in range(n_entities)]


def random_anomalies(rng: np.random.Generator, entities: Sequence[str], duration: int, count: int,
                     magnitude: Tuple[float, float] = (2.5, 4.0),
                     length: Tuple[int, int] = (20, 60), warmup: int = DAY // 2,
                     kinds: Sequence[str] = ("spike", "dip")) -> List[AnomalySpec]:
    """Non-overlapping anomalies spread over distinct entities where possible."""
    out: List[AnomalySpec] = []
    if count and duration - length[1] <= 0:
        raise SyntheticSpecError(f"duration {duration} cannot hold anomalies of length {length[1]}")
    warmup = min(warmup, duration // 2)
    order = list(rng.permutation(len(entities)))
    for i in range(count):
        entity = entities[order[i % len(entities)]]
        for _ in range(1000):
            n = int(rng.integers(length[0], length[1] + 1))
            start = int(rng.integers(warmup, max(warmup + 1, duration - n)))
            gap = 2 * length[1]
            if all(a.entity != entity or start + n + gap <= a.start or a.end + gap < start for a in out):
                break
        else:
            raise SyntheticSpecError("could not place anomalies without overlap")
        out.append(AnomalySpec(entity, start, n, float(rng.uniform(*magnitude)),
                               kinds[int(rng.integers(len(kinds)))]))
    return sorted(out, key=lambda a: (a.start, a.entity))


def generate_synthetic(seed: int = 0, n_entities: int = 20, duration: int = 7 * DAY,
                       anomalies: Union[int, Sequence[AnomalySpec]] = 10,
                       profile: TrafficProfile = TrafficProfile(),
                       include_total: bool = True,
                       magnitude: Tuple[float, float] = (2.5, 4.0),
                       ) -> Tuple[List[TimePointSeries], List[GroundTruthEvent]]:
    """Time-point series (one per entity/variable) and the injected truth events.

    ``anomalies`` is either a count of randomly placed anomalies or an explicit
    list. Output is a pure function of the arguments.
    """
    rng = np.random.default_rng(seed)
    entities = entity_names(n_entities)
    if isinstance(anomalies, int):
        specs = random_anomalies(rng, entities, duration, anomalies, magnitude=magnitude)
    else:
        specs = list(anomalies)
    _validate(specs, entities, duration)

    minutes = np.arange(duration, dtype=np.int64)
    base = profile.baseline(minutes)
    scales = rng.uniform(*profile.scale_range, size=n_entities)
    series: List[TimePointSeries] = []
    total = np.zeros(duration)
    for i, entity in enumerate(entities):
        noise = rng.uniform(1 - profile.noise, 1 + profile.noise, size=duration)
        values = base * scales[i] * noise
        for a in specs:
            if a.entity == entity:
                values[a.start:a.end + 1] *= a.factors()
        values = np.round(values)
        total += values
        series.append(TimePointSeries(entity, SENT_VARIABLE, minutes, values))
    if include_total:
        series.insert(0, TimePointSeries(WILDCARD, TOTAL_VARIABLE, minutes, total))
    truth = [GroundTruthEvent(a.entity, a.start, a.end, a.kind) for a in specs]
    return series, truth

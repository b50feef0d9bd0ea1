"""Events, sequences, spatial regions and window splitting."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class ValidationError(ValueError):
    """Input data violates a structural invariant."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class NumericError(ArithmeticError):
    """A numerical routine failed to reach its tolerance or produced non-finite values."""


@dataclass(frozen=True)
class Event:
    t: float
    x: float
    y: float

    @property
    def s(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class EventSequence:
    """Time-ordered events observed on ``[0, t_end]``.

    Construction checks strict ordering and finiteness; use
    :func:`validate_sequence` for the region check.
    """

    events: tuple[Event, ...]
    t_end: float

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        _check_invariants(self.events, self.t_end)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __getitem__(self, i):
        return self.events[i]

    @property
    def times(self) -> np.ndarray:
        return np.array([e.t for e in self.events], dtype=float)

    @property
    def locations(self) -> np.ndarray:
        return np.array([[e.x, e.y] for e in self.events], dtype=float).reshape(-1, 2)

    @classmethod
    def from_arrays(cls, times, locations, t_end: float | None = None) -> "EventSequence":
        times = np.asarray(times, dtype=float).reshape(-1)
        locations = np.asarray(locations, dtype=float).reshape(-1, 2)
        if len(times) != len(locations):
            raise ValidationError(f"{len(times)} times but {len(locations)} locations")
        if t_end is None:
            t_end = float(times[-1]) if len(times) else 0.0
        events = tuple(Event(float(t), float(x), float(y)) for t, (x, y) in zip(times, locations))
        return cls(events, float(t_end))

    def before(self, t: float) -> "EventSequence":
        """Events strictly earlier than ``t``, same horizon."""
        return EventSequence(tuple(e for e in self.events if e.t < t), self.t_end)

    def through(self, t: float) -> "EventSequence":
        """Events at or before ``t``, same horizon."""
        k = int(np.searchsorted(self.times, t, side="right"))
        return EventSequence(self.events[:k], self.t_end)


def _check_invariants(events: Sequence[Event], t_end: float) -> None:
    if not math.isfinite(t_end):
        raise ValidationError("t_end is not finite")
    prev = -math.inf
    for i, e in enumerate(events):
        if not (math.isfinite(e.t) and math.isfinite(e.x) and math.isfinite(e.y)):
            raise ValidationError(f"non-finite value at index {i}", i)
        if e.t <= prev:
            raise ValidationError(f"non-monotone at index {i}", i)
        if e.t < 0 or e.t > t_end:
            raise ValidationError(f"time {e.t} outside [0, {t_end}] at index {i}", i)
        prev = e.t


@dataclass(frozen=True)
class SpatialRegion:
    """Either an axis-aligned rectangle ``[lo, hi]`` or the whole plane (``lo is None``)."""

    lo: tuple[float, float] | None = None
    hi: tuple[float, float] | None = None

    def __post_init__(self):
        if (self.lo is None) != (self.hi is None):
            raise ValueError("rectangle needs both lo and hi")
        if self.lo is not None:
            lo = (float(self.lo[0]), float(self.lo[1]))
            hi = (float(self.hi[0]), float(self.hi[1]))
            if not (lo[0] < hi[0] and lo[1] < hi[1]):
                raise ValueError(f"rectangle requires lo < hi componentwise, got {lo}, {hi}")
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)

    @classmethod
    def rectangle(cls, lo, hi) -> "SpatialRegion":
        return cls(tuple(lo), tuple(hi))

    @classmethod
    def plane(cls) -> "SpatialRegion":
        return cls()

    @property
    def bounded(self) -> bool:
        return self.lo is not None

    @property
    def area(self) -> float:
        if not self.bounded:
            return math.inf
        return (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])

    def contains(self, s) -> np.ndarray | bool:
        s = np.asarray(s, dtype=float)
        if not self.bounded:
            return np.ones(s.shape[:-1], dtype=bool) if s.ndim > 1 else True
        inside = (
            (s[..., 0] >= self.lo[0]) & (s[..., 0] <= self.hi[0])
            & (s[..., 1] >= self.lo[1]) & (s[..., 1] <= self.hi[1])
        )
        return inside if s.ndim > 1 else bool(inside)

    def cell_centers(self, nx: int, ny: int) -> tuple[np.ndarray, np.ndarray, float]:
        """Cell-center coordinates (each ``nx``×``ny``, ``indexing='ij'``) and the cell area."""
        if not self.bounded:
            raise ValueError("cannot grid an unbounded region")
        dx = (self.hi[0] - self.lo[0]) / nx
        dy = (self.hi[1] - self.lo[1]) / ny
        xs = self.lo[0] + dx * (np.arange(nx) + 0.5)
        ys = self.lo[1] + dy * (np.arange(ny) + 0.5)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return gx, gy, dx * dy

    def inflated(self, frac: float) -> "SpatialRegion":
        wx = (self.hi[0] - self.lo[0]) * frac / 2
        wy = (self.hi[1] - self.lo[1]) * frac / 2
        return SpatialRegion.rectangle((self.lo[0] - wx, self.lo[1] - wy), (self.hi[0] + wx, self.hi[1] + wy))

    @classmethod
    def bounding_box(cls, locations, inflate: float = 0.0) -> "SpatialRegion":
        locations = np.asarray(locations, dtype=float).reshape(-1, 2)
        lo = locations.min(axis=0)
        hi = locations.max(axis=0)
        # degenerate boxes get unit width
        hi = np.where(hi > lo, hi, lo + 1.0)
        box = cls.rectangle(lo, hi)
        return box.inflated(inflate) if inflate else box


@dataclass(frozen=True)
class SplitSpec:
    window_length: float
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        if any(r <= 0 for r in self.ratios) or abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"ratios must be positive and sum to 1, got {self.ratios}")


Pair = tuple[EventSequence, Event]


@dataclass
class Split:
    train: list[Pair] = field(default_factory=list)
    val: list[Pair] = field(default_factory=list)
    test: list[Pair] = field(default_factory=list)

    def __iter__(self):
        return iter((self.train, self.val, self.test))


def make_windows(seq: EventSequence, window_length: float) -> list[Pair]:
    """Cut ``seq`` into ``[k*L, (k+1)*L)`` windows; each window with at least
    two events yields (all but last, last)."""
    if not window_length > 0:
        raise ValueError("window_length must be positive")
    buckets: dict[int, list[Event]] = {}
    for e in seq.events:
        buckets.setdefault(int(math.floor(e.t / window_length)), []).append(e)
    pairs = []
    for k in sorted(buckets):
        evs = buckets[k]
        if len(evs) < 2:
            continue
        pairs.append((EventSequence(tuple(evs[:-1]), evs[-2].t), evs[-1]))
    return pairs


def window_split(seq: EventSequence, spec: SplitSpec) -> Split:
    """Window the sequence, shuffle the windows with ``spec.seed`` and slice by ``spec.ratios``."""
    if len(seq) < 2:
        raise ValidationError("window_split needs at least 2 events")
    pairs = make_windows(seq, spec.window_length)
    if not pairs:
        raise ValidationError("no usable windows: every window has fewer than 2 events")
    order = np.random.default_rng(spec.seed).permutation(len(pairs))
    shuffled = [pairs[i] for i in order]
    n = len(shuffled)
    n_train = int(round(spec.ratios[0] * n))
    n_val = int(round(spec.ratios[1] * n))
    n_val = min(n_val, n - n_train)
    return Split(
        shuffled[:n_train],
        shuffled[n_train:n_train + n_val],
        shuffled[n_train + n_val:],
    )


def validate_sequence(seq: EventSequence, region: SpatialRegion) -> None:
    _check_invariants(seq.events, seq.t_end)
    if not region.bounded:
        return
    for i, e in enumerate(seq.events):
        if not region.contains((e.x, e.y)):
            raise ValidationError(f"out of region at index {i}", i)


def rescale_times(seq: EventSequence) -> tuple[EventSequence, float]:
    """Rescale so the mean inter-event gap is 1. Returns the sequence and the factor applied."""
    if len(seq) < 2:
        return seq, 1.0
    gaps = np.diff(seq.times)
    factor = 1.0 / float(gaps.mean())
    return EventSequence.from_arrays(seq.times * factor, seq.locations, seq.t_end * factor), factor


# -- JSONL -----------------------------------------------------------------

def read_jsonl(path: str | Path, rescale: bool = False) -> EventSequence:
    """Read ``{"t","x","y"}`` lines with an optional ``{"t_end"}`` header line."""
    t_end = None
    events: list[Event] = []
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno + 1}: {exc}") from exc
            if lineno == 0 and "t_end" in obj and "t" not in obj:
                t_end = float(obj["t_end"])
                continue
            try:
                events.append(Event(float(obj["t"]), float(obj["x"]), float(obj["y"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{lineno + 1}: bad event record {line!r}") from exc
    if t_end is None:
        t_end = events[-1].t if events else 0.0
    seq = EventSequence(tuple(events), t_end)
    return rescale_times(seq)[0] if rescale else seq


def write_jsonl(seq: EventSequence, path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"t_end": seq.t_end}) + "\n")
        for e in seq.events:
            fh.write(json.dumps({"t": e.t, "x": e.x, "y": e.y}) + "\n")


def concat_locations(pairs: Iterable[Pair]) -> np.ndarray:
    chunks = []
    for window, target in pairs:
        chunks.append(window.locations)
        chunks.append(np.array([[target.x, target.y]]))
    return np.concatenate(chunks, axis=0)

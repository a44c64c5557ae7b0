"""Fixed-width vector clocks over a closed population of users.

A clock holds one non-negative counter per user index.  Clocks produced by
the operation table are totally ordered because every new stamp is built by
joining all earlier stamps before ticking, but the comparison here handles
the general partial order so hand-built clocks work too.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable


class ClockOrder(enum.Enum):
    """Outcome of comparing two clocks under the happens-before partial order."""

    BEFORE = "before"
    AFTER = "after"
    CONCURRENT = "concurrent"
    EQUAL = "equal"


@dataclass(frozen=True)
class VectorClock:
    """Immutable vector of per-user event counts.

    The width fixes the user population for the whole trace; clocks of
    different widths are never comparable and raise ValueError.
    """

    entries: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.entries and min(self.entries) < 0:
            raise ValueError(f"clock entries must be non-negative: {self.entries}")

    @classmethod
    def zero(cls, width: int) -> "VectorClock":
        if width <= 0:
            raise ValueError("clock width must be positive")
        return cls((0,) * width)

    @classmethod
    def of(cls, entries: Iterable[int]) -> "VectorClock":
        return cls(tuple(entries))

    @property
    def width(self) -> int:
        return len(self.entries)

    def __getitem__(self, idx: int) -> int:
        return self.entries[idx]

    def __str__(self) -> str:
        return "[" + ",".join(str(e) for e in self.entries) + "]"

    @classmethod
    def parse(cls, text: str) -> "VectorClock":
        body = text.strip()
        if not (body.startswith("[") and body.endswith("]")):
            raise ValueError(f"not a clock literal: {text!r}")
        inner = body[1:-1].strip()
        if not inner:
            raise ValueError("empty clock literal")
        return cls(tuple(int(part) for part in inner.split(",")))


def _check_widths(a: VectorClock, b: VectorClock) -> None:
    if a.width != b.width:
        raise ValueError(f"clock width mismatch: {a.width} vs {b.width}")


def tick(clock: VectorClock, user_index: int) -> VectorClock:
    """Advance one user's entry by one; all other entries are untouched."""
    if not 0 <= user_index < clock.width:
        raise IndexError(f"user index {user_index} out of range for width {clock.width}")
    entries = list(clock.entries)
    entries[user_index] += 1
    return VectorClock(tuple(entries))


def merge(a: VectorClock, b: VectorClock) -> VectorClock:
    """Entry-wise maximum: the least clock that dominates both inputs."""
    _check_widths(a, b)
    return VectorClock(tuple(max(x, y) for x, y in zip(a.entries, b.entries)))


def compare(a: VectorClock, b: VectorClock) -> ClockOrder:
    """Classify the pair under happens-before.

    BEFORE means a <= b entry-wise with a != b; AFTER is the mirror image;
    EQUAL means identical entries; anything else is CONCURRENT.
    """
    _check_widths(a, b)
    a_le_b = all(x <= y for x, y in zip(a.entries, b.entries))
    b_le_a = all(y <= x for x, y in zip(a.entries, b.entries))
    if a_le_b and b_le_a:
        return ClockOrder.EQUAL
    if a_le_b:
        return ClockOrder.BEFORE
    if b_le_a:
        return ClockOrder.AFTER
    return ClockOrder.CONCURRENT


def dominates(a: VectorClock, b: VectorClock) -> bool:
    """True when a is at least b in every entry (a >= b entry-wise)."""
    _check_widths(a, b)
    return all(x >= y for x, y in zip(a.entries, b.entries))

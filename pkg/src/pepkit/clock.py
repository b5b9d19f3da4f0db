"""Clocks. Scenario mode runs on a simulated clock; servers use wall time."""

from __future__ import annotations

import time


class Clock:
    """Read-only time source, integer seconds."""

    def now(self) -> int:
        raise NotImplementedError


class SystemClock(Clock):
    def now(self) -> int:
        return int(time.time())


class SimClock(Clock):
    """Manually driven clock. Never moves backwards."""

    def __init__(self, start: int = 0):
        self._now = int(start)

    def now(self) -> int:
        return self._now

    def advance(self, seconds: int) -> None:
        if seconds < 0:
            raise ValueError("clock cannot move backwards")
        self._now += int(seconds)

    def set(self, t: int) -> None:
        if t < self._now:
            raise ValueError(f"clock cannot move backwards ({t} < {self._now})")
        self._now = int(t)


HOUR = 3600
DAY = 24 * HOUR

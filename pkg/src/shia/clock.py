"""Monotonic millisecond clocks with scheduled callbacks.

Two interchangeable modes drive every timed behaviour in the tool:

* ``VirtualClock`` - time advances only through ``advance``; due callbacks
  (sleepers) fire instantly in deadline order. Deterministic, used by tests
  and fast sweeps.
* ``RealClock`` - ``wait_until`` pumps the same callback queue while
  actually sleeping between deadlines; ``post`` injects work from other
  threads and wakes the pump.

All co-simulated components (model server, board server, loopback
transport) share one clock and run their callbacks on whichever thread
pumps it, so no component needs its own locking.
"""

from __future__ import annotations

import heapq
import threading
import time
from typing import Callable, Optional


class ClockModeError(RuntimeError):
    """Operation not supported in this clock mode."""


class Timer:
    """Handle for one scheduled callback."""

    __slots__ = ("deadline_ms", "_fn", "_cancelled")

    def __init__(self, deadline_ms: int, fn: Callable[[], None]):
        self.deadline_ms = deadline_ms
        self._fn = fn
        self._cancelled = False

    def cancel(self) -> None:
        self._cancelled = True

    @property
    def cancelled(self) -> bool:
        return self._cancelled


class _BaseClock:
    mode = "abstract"

    def __init__(self) -> None:
        self._cond = threading.Condition()
        self._heap: list[tuple[int, int, Timer]] = []
        self._seq = 0

    def now(self) -> int:
        raise NotImplementedError

    def call_at(self, deadline_ms: int, fn: Callable[[], None]) -> Timer:
        """Register a sleeper released when the clock reaches ``deadline_ms``."""
        timer = Timer(int(deadline_ms), fn)
        with self._cond:
            self._seq += 1
            heapq.heappush(self._heap, (timer.deadline_ms, self._seq, timer))
            self._cond.notify_all()
        return timer

    def call_later(self, delta_ms: int, fn: Callable[[], None]) -> Timer:
        return self.call_at(self.now() + int(delta_ms), fn)

    def post(self, fn: Callable[[], None]) -> Timer:
        """Schedule ``fn`` as soon as possible; safe to call from any thread."""
        return self.call_at(self.now(), fn)

    def next_deadline(self) -> Optional[int]:
        with self._cond:
            while self._heap and self._heap[0][2].cancelled:
                heapq.heappop(self._heap)
            return self._heap[0][0] if self._heap else None

    def _pop_due(self, limit_ms: int) -> Optional[Timer]:
        with self._cond:
            while self._heap:
                deadline, _, timer = self._heap[0]
                if timer.cancelled:
                    heapq.heappop(self._heap)
                    continue
                if deadline <= limit_ms:
                    heapq.heappop(self._heap)
                    return timer
                return None
            return None


class VirtualClock(_BaseClock):
    """Deterministic clock: time moves only when advanced."""

    mode = "virtual"

    def __init__(self, start_ms: int = 0):
        super().__init__()
        self._now = int(start_ms)

    def now(self) -> int:
        return self._now

    def advance(self, delta_ms: int) -> None:
        """Move time forward, releasing due sleepers in deadline order."""
        if delta_ms < 0:
            raise ValueError("cannot advance time backwards")
        target = self._now + int(delta_ms)
        while True:
            timer = self._pop_due(target)
            if timer is None:
                break
            self._now = max(self._now, timer.deadline_ms)
            timer._fn()
        self._now = target

    def wait_until(self, deadline_ms: int) -> None:
        if deadline_ms > self._now:
            self.advance(deadline_ms - self._now)


class RealClock(_BaseClock):
    """Wall-paced clock; ``wait_until`` sleeps between deadlines."""

    mode = "real"

    def __init__(self) -> None:
        super().__init__()
        self._t0 = time.monotonic()

    def now(self) -> int:
        return int((time.monotonic() - self._t0) * 1000)

    def advance(self, delta_ms: int) -> None:
        raise ClockModeError("advance() is only available on the virtual clock")

    def wait_until(self, deadline_ms: int) -> None:
        """Pump due callbacks, sleeping between deadlines, until ``deadline_ms``."""
        while True:
            now = self.now()
            timer = self._pop_due(now)
            if timer is not None:
                timer._fn()
                continue
            if now >= deadline_ms:
                return
            with self._cond:
                nxt = self.next_deadline()
                wake = min(deadline_ms, nxt) if nxt is not None else deadline_ms
                remaining = wake - self.now()
                if remaining > 0:
                    self._cond.wait(remaining / 1000.0)


Clock = VirtualClock | RealClock


def sleep_until(clock: Clock, deadline_ms: int) -> None:
    """Block (real) or fast-forward (virtual) until the clock reaches the deadline."""
    clock.wait_until(deadline_ms)


def advance(clock: Clock, delta_ms: int) -> None:
    """Advance a virtual clock; raises ClockModeError on a real clock."""
    clock.advance(delta_ms)

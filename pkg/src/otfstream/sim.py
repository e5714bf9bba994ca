"""Cooperative event loop with two time policies: virtual (event-jumping) and wall clock.

Every concurrent entity in this package (client sessions, transcode workers,
request handlers) is an ``async def`` coroutine driven by one of these loops.
Under :class:`VirtualLoop` time jumps straight to the next scheduled wake-up,
so a 600 s experiment runs in milliseconds and is bit-reproducible: execution
order is fully determined by (time, scheduling sequence number). Under
:class:`WallLoop` the same coroutines run against the monotonic clock, and
callbacks may be injected from foreign threads (used by the live HTTP
frontend).

The primitives mirror the small subset of asyncio this package needs; asyncio
itself cannot be used because it has no virtual time.
"""

from __future__ import annotations

import heapq
import itertools
import math
import threading
import time as _time
from collections import deque

__all__ = [
    "CancelledError",
    "QueueFull",
    "Handle",
    "Future",
    "Task",
    "Event",
    "Queue",
    "VirtualLoop",
    "WallLoop",
    "wait_for",
]

_PENDING = 0
_DONE = 1


class CancelledError(Exception):
    pass


class QueueFull(Exception):
    pass


class Handle:
    """A scheduled callback. cancel() makes the loop skip it when it comes up."""

    __slots__ = ("when", "callback", "args", "cancelled")

    def __init__(self, when, callback, args):
        self.when = when
        self.callback = callback
        self.args = args
        self.cancelled = False

    def cancel(self):
        self.cancelled = True


class Future:
    """Single-assignment result container, awaitable by coroutines on the same loop."""

    __slots__ = ("_loop", "_state", "_value", "_exception", "_callbacks", "_retrieved")

    def __init__(self, loop):
        self._loop = loop
        self._state = _PENDING
        self._value = None
        self._exception = None
        self._callbacks = []
        self._retrieved = False

    @classmethod
    def completed(cls, loop, value=None):
        fut = cls(loop)
        fut._state = _DONE
        fut._value = value
        return fut

    @property
    def loop(self):
        return self._loop

    def done(self):
        return self._state is not _PENDING

    def set_result(self, value):
        if self._state is not _PENDING:
            raise RuntimeError("future already resolved")
        self._state = _DONE
        self._value = value
        self._schedule_callbacks()

    def set_exception(self, exc):
        if self._state is not _PENDING:
            raise RuntimeError("future already resolved")
        self._state = _DONE
        self._exception = exc
        self._schedule_callbacks()

    def result(self):
        if self._state is _PENDING:
            raise RuntimeError("future is still pending")
        self._retrieved = True
        if self._exception is not None:
            raise self._exception
        return self._value

    def exception(self):
        if self._state is _PENDING:
            raise RuntimeError("future is still pending")
        self._retrieved = True
        return self._exception

    def add_done_callback(self, fn):
        if self._state is not _PENDING:
            self._loop.call_soon(fn, self)
        else:
            self._callbacks.append(fn)

    def _schedule_callbacks(self):
        callbacks = self._callbacks
        self._callbacks = []
        for fn in callbacks:
            self._loop.call_soon(fn, self)

    def __await__(self):
        if self._state is _PENDING:
            yield self
            if self._state is _PENDING:
                raise RuntimeError("coroutine resumed with future still pending")
        return self.result()


class Task(Future):
    """Drives a coroutine to completion; resolves with its return value."""

    __slots__ = ("_coro", "name")

    def __init__(self, coro, loop, name=None):
        super().__init__(loop)
        self._coro = coro
        self.name = name or getattr(coro, "__name__", "task")
        loop.call_soon(self._step, None, None)

    def _step(self, value, exc):
        if self.done():
            return
        try:
            if exc is not None:
                awaited = self._coro.throw(exc)
            else:
                awaited = self._coro.send(value)
        except StopIteration as stop:
            self.set_result(stop.value)
        except BaseException as err:  # noqa: BLE001 - task boundary
            self.set_exception(err)
            self._loop._note_failed_task(self)
        else:
            if not isinstance(awaited, Future):
                raise TypeError(f"task {self.name!r} awaited a non-sim object: {awaited!r}")
            awaited.add_done_callback(self._resume)

    def _resume(self, fut):
        exc = fut._exception
        if exc is not None:
            fut._retrieved = True
            self._step(None, exc)
        else:
            self._step(fut._value, None)

    def __del__(self):
        if not self.done():
            try:
                self._coro.close()
            except Exception:
                pass


class Event:
    """Broadcast flag: set() wakes every current and future waiter."""

    __slots__ = ("_loop", "_set", "_waiters")

    def __init__(self, loop):
        self._loop = loop
        self._set = False
        self._waiters = []

    def is_set(self):
        return self._set

    def set(self):
        if self._set:
            return
        self._set = True
        waiters, self._waiters = self._waiters, []
        for fut in waiters:
            if not fut.done():
                fut.set_result(None)

    def wait(self):
        if self._set:
            return Future.completed(self._loop)
        fut = Future(self._loop)
        self._waiters.append(fut)
        return fut


class Queue:
    """FIFO with synchronous put and awaitable get. maxsize 0 means unbounded."""

    __slots__ = ("_loop", "_items", "_getters", "maxsize")

    def __init__(self, loop, maxsize=0):
        self._loop = loop
        self._items = deque()
        self._getters = deque()
        self.maxsize = maxsize

    def __len__(self):
        return len(self._items)

    def put_nowait(self, item, force=False):
        """Enqueue or hand straight to a waiting getter; force bypasses the bound
        (used for shutdown sentinels that must reach workers behind a backlog)."""
        while self._getters:
            getter = self._getters.popleft()
            if getter.done():
                continue  # abandoned by wait_for timeout
            getter.set_result(item)
            return
        if not force and self.maxsize and len(self._items) >= self.maxsize:
            raise QueueFull(f"queue at bound {self.maxsize}")
        self._items.append(item)

    def get(self):
        if self._items:
            return Future.completed(self._loop, self._items.popleft())
        fut = Future(self._loop)
        self._getters.append(fut)
        return fut


def wait_for(fut, timeout):
    """Future resolving with fut's outcome, or TimeoutError after timeout seconds.

    The underlying future keeps running; on timeout its eventual result is discarded.
    """
    loop = fut.loop
    out = Future(loop)

    def on_timeout():
        if not out.done():
            out.set_exception(TimeoutError(f"timed out after {timeout} s"))

    timer = loop.call_later(timeout, on_timeout)

    def on_done(inner):
        timer.cancel()
        if out.done():
            inner._retrieved = True
            return
        exc = inner._exception
        inner._retrieved = True
        if exc is not None:
            out.set_exception(exc)
        else:
            out.set_result(inner._value)

    fut.add_done_callback(on_done)
    return out


class VirtualLoop:
    """Single-threaded event loop over virtual time.

    Deterministic: ties at the same timestamp run in scheduling order, and
    nothing outside the loop (threads, OS timers, real RNG) can reorder work.
    """

    def __init__(self, start=0.0):
        self._now = float(start)
        self._ready = deque()
        self._timers = []
        self._tick = itertools.count()
        self._failed_tasks = []

    # -- scheduling --------------------------------------------------------

    def now(self):
        return self._now

    def call_soon(self, callback, *args):
        handle = Handle(self._now, callback, args)
        self._ready.append(handle)
        return handle

    def call_at(self, when, callback, *args):
        if when < self._now:
            raise ValueError(f"cannot schedule into the past ({when} < {self._now})")
        handle = Handle(when, callback, args)
        heapq.heappush(self._timers, (when, next(self._tick), handle))
        return handle

    def call_later(self, delay, callback, *args):
        return self.call_at(self._now + delay, callback, *args)

    def spawn(self, coro, name=None):
        return Task(coro, self, name=name)

    def sleep(self, delay):
        """Awaitable that resolves after `delay` seconds; never resolves for inf."""
        fut = Future(self)
        if delay <= 0:
            fut.set_result(None)
        elif not math.isinf(delay):
            self.call_at(self._now + delay, fut.set_result, None)
        return fut

    def run_in_thread(self, fn, *args):
        raise RuntimeError("run_in_thread is not available under virtual time")

    # -- running -----------------------------------------------------------

    def _run_ready(self):
        ready = self._ready
        while ready:
            handle = ready.popleft()
            if not handle.cancelled:
                handle.callback(*handle.args)

    def _next_timer(self):
        timers = self._timers
        while timers:
            if timers[0][2].cancelled:
                heapq.heappop(timers)
            else:
                return timers[0][0]
        return None

    def run_until(self, deadline):
        """Execute everything scheduled at times <= deadline; leave now() == deadline."""
        self._run_ready()
        while True:
            when = self._next_timer()
            if when is None or when > deadline:
                break
            _, _, handle = heapq.heappop(self._timers)
            self._now = when
            if not handle.cancelled:
                handle.callback(*handle.args)
            self._run_ready()
        if deadline > self._now:
            self._now = deadline

    def run_until_complete(self, awaitable):
        """Drive the loop until the awaitable resolves; error out on deadlock."""
        fut = awaitable if isinstance(awaitable, Future) else self.spawn(awaitable)
        self._run_ready()
        while not fut.done():
            when = self._next_timer()
            if when is None:
                raise RuntimeError("deadlock: awaitable cannot complete, no timers pending")
            _, _, handle = heapq.heappop(self._timers)
            self._now = when
            if not handle.cancelled:
                handle.callback(*handle.args)
            self._run_ready()
        return fut.result()

    def run_until_idle(self):
        """Run until no ready callbacks and no timers remain."""
        while True:
            self._run_ready()
            when = self._next_timer()
            if when is None:
                return
            _, _, handle = heapq.heappop(self._timers)
            self._now = when
            if not handle.cancelled:
                handle.callback(*handle.args)

    # -- failure bookkeeping ------------------------------------------------

    def _note_failed_task(self, task):
        self._failed_tasks.append(task)

    def raise_unretrieved(self):
        """Re-raise the first task exception nobody awaited (programming errors)."""
        for task in self._failed_tasks:
            if not task._retrieved:
                task._retrieved = True
                raise task._exception


class WallLoop:
    """The same loop semantics against the monotonic wall clock.

    Callbacks may be scheduled from foreign threads (call_soon/call_at take a
    condition lock); the loop thread sleeps until the next timer or an external
    wake-up. Used for live-mode experiments and the HTTP frontend.
    """

    def __init__(self):
        self._base = _time.monotonic()
        self._cond = threading.Condition()
        self._ready = deque()
        self._timers = []
        self._tick = itertools.count()
        self._failed_tasks = []
        self._stopped = False

    # -- scheduling (threadsafe) --------------------------------------------

    def now(self):
        return _time.monotonic() - self._base

    def call_soon(self, callback, *args):
        handle = Handle(self.now(), callback, args)
        with self._cond:
            self._ready.append(handle)
            self._cond.notify()
        return handle

    def call_at(self, when, callback, *args):
        handle = Handle(when, callback, args)
        with self._cond:
            heapq.heappush(self._timers, (when, next(self._tick), handle))
            self._cond.notify()
        return handle

    def call_later(self, delay, callback, *args):
        return self.call_at(self.now() + delay, callback, *args)

    def spawn(self, coro, name=None):
        return Task(coro, self, name=name)

    def sleep(self, delay):
        fut = Future(self)
        if delay <= 0:
            fut.set_result(None)
        elif not math.isinf(delay):
            self.call_at(self.now() + delay, fut.set_result, None)
        return fut

    def submit(self, coro):
        """Schedule a coroutine from a foreign thread; returns threading.Event-style waiter.

        Returns a plain container with .wait(timeout) -> (value, exception).
        """
        done = threading.Event()
        box = {}

        def finisher(task):
            box["exc"] = task._exception
            task._retrieved = True
            box["value"] = task._value
            done.set()

        def starter():
            self.spawn(coro).add_done_callback(finisher)

        self.call_soon(starter)

        class _Result:
            @staticmethod
            def wait(timeout=None):
                if not done.wait(timeout):
                    raise TimeoutError("submitted coroutine did not finish in time")
                if box["exc"] is not None:
                    raise box["exc"]
                return box["value"]

        return _Result()

    def run_in_thread(self, fn, *args):
        """Run a blocking callable in a worker thread; resolves on the loop."""
        fut = Future(self)

        def runner():
            try:
                value = fn(*args)
            except BaseException as err:  # noqa: BLE001 - thread boundary
                self.call_soon(fut.set_exception, err)
            else:
                self.call_soon(fut.set_result, value)

        threading.Thread(target=runner, daemon=True).start()
        return fut

    # -- running -------------------------------------------------------------

    def _pop_runnable(self):
        """Under the lock: next handle due now, or (None, wait_seconds)."""
        if self._ready:
            return self._ready.popleft(), None
        now = self.now()
        timers = self._timers
        while timers:
            when, _, handle = timers[0]
            if handle.cancelled:
                heapq.heappop(timers)
                continue
            if when <= now:
                heapq.heappop(timers)
                return handle, None
            return None, when - now
        return None, None

    def run_until_complete(self, awaitable, timeout=None):
        fut = awaitable if isinstance(awaitable, Future) else self.spawn(awaitable)
        deadline = None if timeout is None else self.now() + timeout
        while not fut.done():
            with self._cond:
                handle, wait_s = self._pop_runnable()
                if handle is None:
                    if deadline is not None:
                        remaining = deadline - self.now()
                        if remaining <= 0:
                            raise TimeoutError("run_until_complete timed out")
                        wait_s = remaining if wait_s is None else min(wait_s, remaining)
                    self._cond.wait(wait_s)
                    continue
            if not handle.cancelled:
                handle.callback(*handle.args)
        return fut.result()

    def run_forever(self):
        """Serve scheduled work until stop() is called from any thread."""
        while True:
            with self._cond:
                if self._stopped:
                    return
                handle, wait_s = self._pop_runnable()
                if handle is None:
                    self._cond.wait(wait_s if wait_s is not None else 0.1)
                    continue
            if not handle.cancelled:
                handle.callback(*handle.args)

    def stop(self):
        with self._cond:
            self._stopped = True
            self._cond.notify_all()

    # -- failure bookkeeping ---------------------------------------------------

    def _note_failed_task(self, task):
        self._failed_tasks.append(task)

    def raise_unretrieved(self):
        for task in self._failed_tasks:
            if not task._retrieved:
                task._retrieved = True
                raise task._exception

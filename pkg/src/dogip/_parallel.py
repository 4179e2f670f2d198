"""Chunked element loops with optional thread workers.

Results are always reduced in chunk order, so parallel runs reproduce
serial runs bit for bit.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_serial = False


def set_serial(flag=True):
    global _serial
    _serial = bool(flag)


def worker_count():
    if _serial:
        return 1
    cap = os.environ.get("DOGIP_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def chunks(n, size):
    return [(s, min(s + size, n)) for s in range(0, n, max(1, size))]


def map_ordered(fn, items):
    """Yield ``fn(item)`` for each item, in input order."""
    workers = worker_count()
    if workers == 1 or len(items) < 2:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # bounded look-ahead keeps memory at ~workers chunks in flight
        pending = []
        it = iter(items)
        for item in it:
            pending.append(pool.submit(fn, item))
            if len(pending) >= 2 * workers:
                break
        while pending:
            fut = pending.pop(0)
            nxt = next(it, None)
            if nxt is not None:
                pending.append(pool.submit(fn, nxt))
            yield fut.result()

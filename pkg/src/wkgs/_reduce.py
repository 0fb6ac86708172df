"""Deterministic reductions and worker-pool plumbing.

Everything downstream promises bit-identical output for any WKGS_THREADS
value, so all parallelism in this package follows one recipe: split work
into *fixed* chunks (independent of the worker count), evaluate the chunks
(possibly concurrently), and combine the per-chunk results sequentially in
chunk order.  Since each chunk's arithmetic is self-contained, the combined
result cannot depend on how many threads happened to run.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_CHUNKS = 64  # fixed fan-out, independent of thread count


def thread_count():
    raw = os.environ.get("WKGS_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    return max(1, n)


def fixed_chunks(n_items, n_chunks=_CHUNKS):
    """Split range(n_items) into at most n_chunks contiguous index pairs."""
    n_chunks = min(n_chunks, n_items) if n_items else 0
    bounds = np.linspace(0, n_items, n_chunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def chunked_map(fn, chunks, workers=None):
    """fn(lo, hi) over fixed chunks; results returned in chunk order.

    workers=1 forces sequential evaluation.  Callers doing big-float work
    must pass it: the big-float library's elementary functions temporarily
    bump the process-global working precision, so concurrent chunks would
    see each other's guard digits and the output would depend on thread
    interleaving.  (Those chunks hold the GIL anyway, so nothing is lost.)
    """
    if workers is None:
        workers = thread_count()
    if workers == 1 or len(chunks) <= 1:
        return [fn(lo, hi) for lo, hi in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [pool.submit(fn, lo, hi) for lo, hi in chunks]
        return [f.result() for f in futs]


def pairwise_sum(values):
    """Pairwise-tree sum of a 1-d float array; fixed association order."""
    a = np.asarray(values, dtype=np.float64).copy()
    n = a.size
    if n == 0:
        return 0.0
    while n > 1:
        half = n // 2
        a[:half] += a[half : 2 * half]
        if n % 2:
            a[half] = a[2 * half]
            n = half + 1
        else:
            n = half
    return float(a[0])

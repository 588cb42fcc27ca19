"""On-disk cache for partition-sum arrays.

Entries are ``.npy`` files named by the sha256 of (graph dump, edge
weights, parameters). Writes go through a rename, so readers never see a
partial file; an unreadable or malformed entry is recomputed with a warning.
The cache is off unless a directory is activated with :func:`use`.
"""

from __future__ import annotations

import contextlib
import hashlib
import io
import os
import warnings
from pathlib import Path

import numpy as np

_ACTIVE = None


class CacheWarning(UserWarning):
    pass


def default_dir():
    env = os.environ.get("CMSTHERMO_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "cmsthermo"


@contextlib.contextmanager
def use(directory):
    """Activate the cache in ``directory`` for the duration of the block."""
    global _ACTIVE
    prev = _ACTIVE
    _ACTIVE = SumCache(directory) if directory is not None else None
    try:
        yield _ACTIVE
    finally:
        _ACTIVE = prev


def active():
    return _ACTIVE


def content_key(kind, graph, weights, params):
    from .shifts import dump_truncation

    h = hashlib.sha256()
    h.update(kind.encode())
    h.update(dump_truncation(graph).encode())
    h.update(np.ascontiguousarray(graph.level_array, dtype=np.int64).tobytes())
    h.update(np.ascontiguousarray(weights, dtype=np.float64).tobytes())
    h.update(repr(tuple(params)).encode())
    return h.hexdigest()


class SumCache:
    def __init__(self, directory):
        self.dir = Path(directory)
        self.hits = 0
        self.misses = 0

    def path(self, key):
        return self.dir / key[:2] / f"{key}.npy"

    def get(self, key, length):
        p = self.path(key)
        if not p.exists():
            return None
        try:
            arr = np.load(p, allow_pickle=False)
            if arr.shape != (length,) or arr.dtype != np.float64:
                raise ValueError(f"shape {arr.shape}, dtype {arr.dtype}")
        except Exception as exc:
            warnings.warn(f"corrupt cache entry {p.name} ({exc}); recomputing", CacheWarning, stacklevel=3)
            return None
        return arr

    def put(self, key, arr):
        from .reports import atomic_write

        buf = io.BytesIO()
        np.save(buf, np.asarray(arr, dtype=np.float64), allow_pickle=False)
        atomic_write(self.path(key), buf.getvalue())


def cached(kind, graph, weights, params, length, compute):
    """``compute()`` through the active cache (if any)."""
    c = _ACTIVE
    if c is None:
        return compute()
    key = content_key(kind, graph, weights, params)
    arr = c.get(key, length)
    if arr is not None:
        c.hits += 1
        return arr
    c.misses += 1
    arr = compute()
    c.put(key, arr)
    return arr

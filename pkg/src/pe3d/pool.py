"""Fork-join primitives shared by the solver kernels and the executors.

Work is always partitioned into contiguous index blocks whose boundaries
depend only on the item count, never on the thread count of a particular
run, so results stay bit-identical across executor configurations.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import InvariantError

PINNING_MODES = ("none", "compact")


@dataclass(frozen=True)
class ExecutorSpec:
    """Parallelism settings: threads inside a range step, workers across
    frequencies.  ``pinning`` is advisory metadata only."""

    intra_threads: int = 1
    freq_workers: int = 1
    pinning: str = "none"

    def __post_init__(self):
        if self.intra_threads < 1:
            raise InvariantError("intra_threads >= 1", f"got {self.intra_threads}")
        if self.freq_workers < 1:
            raise InvariantError("freq_workers >= 1", f"got {self.freq_workers}")
        if self.pinning not in PINNING_MODES:
            raise InvariantError(
                f"pinning in {PINNING_MODES}", f"got {self.pinning!r}"
            )


def block_ranges(n_items: int, n_blocks: int) -> list[tuple[int, int]]:
    """Split ``range(n_items)`` into at most ``n_blocks`` contiguous blocks.

    Block sizes differ by at most one and the larger blocks come first,
    so the maximum block size is ceil(n_items / n_blocks).  Empty blocks
    are dropped.
    """
    if n_items < 0 or n_blocks < 1:
        raise InvariantError("n_items >= 0 and n_blocks >= 1")
    n_blocks = min(n_blocks, max(n_items, 1))
    base, extra = divmod(n_items, n_blocks)
    ranges = []
    lo = 0
    for b in range(n_blocks):
        hi = lo + base + (1 if b < extra else 0)
        if hi > lo:
            ranges.append((lo, hi))
        lo = hi
    return ranges


# One pool per thread count, reused across range steps: pool startup would
# otherwise dominate small solves.  Forked farm workers must not inherit
# live pools (their threads do not survive the fork), so children start
# with an empty cache.
_POOL_CACHE: dict[int, ThreadPoolExecutor] = {}

if hasattr(os, "register_at_fork"):
    os.register_at_fork(after_in_child=_POOL_CACHE.clear)


def _shared_pool(n_workers: int) -> ThreadPoolExecutor:
    pool = _POOL_CACHE.get(n_workers)
    if pool is None:
        pool = ThreadPoolExecutor(max_workers=n_workers,
                                  thread_name_prefix="pe3d-worker")
        _POOL_CACHE[n_workers] = pool
    return pool


def fork_join(worker, n_items: int, threads: int) -> list[tuple[int, int, BaseException]]:
    """Run ``worker(lo, hi)`` over contiguous blocks of ``range(n_items)``.

    With ``threads == 1`` the blocks run inline; otherwise a shared pool
    of ``threads`` threads executes them and joins before returning (the
    barrier: no caller observes partial writes).  Returns the failures as
    ``(lo, hi, exception)`` tuples; an empty list means full success.
    """
    blocks = block_ranges(n_items, threads)
    failures: list[tuple[int, int, BaseException]] = []
    if threads == 1 or len(blocks) <= 1:
        for lo, hi in blocks:
            try:
                worker(lo, hi)
            except Exception as exc:  # collected, not raised: caller aggregates
                failures.append((lo, hi, exc))
        return failures
    pool = _shared_pool(len(blocks))
    futures = [(lo, hi, pool.submit(worker, lo, hi)) for lo, hi in blocks]
    for lo, hi, fut in futures:
        exc = fut.exception()
        if exc is not None:
            failures.append((lo, hi, exc))
    return failures


def physical_core_count() -> int:
    """Best-effort physical core count; falls back to the logical count."""
    try:
        pairs = set()
        phys, core = None, None
        with open("/proc/cpuinfo") as fh:
            for line in fh:
                if line.startswith("physical id"):
                    phys = line.split(":")[1].strip()
                elif line.startswith("core id"):
                    core = line.split(":")[1].strip()
                elif not line.strip():
                    if phys is not None and core is not None:
                        pairs.add((phys, core))
                    phys, core = None, None
        if phys is not None and core is not None:
            pairs.add((phys, core))
        if pairs:
            return len(pairs)
    except OSError:
        pass
    return os.cpu_count() or 1

"""Chunk-size calculators for the eleven self-scheduling schemes.

A Partitioner owns a shrinking range of rows [0, N) and hands out
contiguous chunks on request.  Every scheme reduces to one rule: given
the current state, compute a raw size, then emit

    size = min(remaining, max(min_chunk, raw))

so chunks never overshoot the range and never drop below the configured
floor.  All divisions round up (ceiling) except TSS, whose decreasing
series rounds half up by definition.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Optional

from .core import InvalidParams, SchemeId, SchemeParams


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class ChunkRange:
    """A chunk as issued: row offset plus size."""

    start: int
    size: int


class Partitioner:
    """Stateful chunk generator for one (scheme, N, P) instance.

    next_chunk() is linearizable: a single lock serializes calls, so
    concurrent workers see a consistent, gap-free, in-order stream of
    chunks covering [0, N) exactly once.
    """

    def __init__(
        self,
        scheme: SchemeId,
        total_rows: int,
        workers: int,
        params: Optional[SchemeParams] = None,
        min_chunk: int = 1,
    ):
        if total_rows < 1:
            raise InvalidParams(f"total_rows must be >= 1, got {total_rows}")
        if workers < 1:
            raise InvalidParams(f"workers must be >= 1, got {workers}")
        if min_chunk < 1:
            raise InvalidParams(f"min_chunk must be >= 1, got {min_chunk}")
        self.scheme = scheme
        self.total_rows = total_rows
        self.workers = workers
        self.params = params if params is not None else SchemeParams()
        self.params.validate()
        self.min_chunk = min_chunk
        self._lock = threading.Lock()
        self._next_start = 0
        self._issued = 0
        self.derived: dict[str, float] = {}
        self._setup()

    # -- derived constants ------------------------------------------------

    def _setup(self) -> None:
        n, p = self.total_rows, self.workers
        q = self.params
        d = self.derived
        if self.scheme is SchemeId.STATIC:
            d["chunk"] = ceil_div(n, p)
        elif self.scheme is SchemeId.MFSC:
            if p == 1:
                d["chunk"] = n
            else:
                ratio = (math.sqrt(2.0) * n) / (p * math.sqrt(math.log(p)))
                d["chunk"] = max(1, math.ceil(ratio ** (2.0 / 3.0)))
        elif self.scheme in (SchemeId.TSS, SchemeId.TFSS):
            first = ceil_div(n, 2 * p)
            last = q.tss_last
            count = ceil_div(2 * n, first + last)
            delta = (first - last) / (count - 1) if count > 1 else 0.0
            d["tss_first"] = first
            d["tss_last"] = last
            d["tss_count"] = count
            d["tss_delta"] = delta
        elif self.scheme in (SchemeId.FISS, SchemeId.VISS):
            b = q.fiss_stages
            c0 = ceil_div(n, (2 + b) * p)
            d["init_chunk"] = c0
            if self.scheme is SchemeId.FISS:
                bump = max(1, math.ceil(2.0 * n * (1.0 - b / (2.0 + b)) / (p * b * (b - 1))))
                d["bump"] = bump
        elif self.scheme is SchemeId.PLS:
            d["static_chunk"] = math.ceil(n * q.pls_swr / p)

    # -- raw per-request size ---------------------------------------------

    def _raw_size(self, remaining: int, issued: int) -> int:
        n, p = self.total_rows, self.workers
        d = self.derived
        s = self.scheme
        if s is SchemeId.STATIC:
            return int(d["chunk"])
        if s is SchemeId.SS:
            return 1
        if s is SchemeId.MFSC:
            return int(d["chunk"])
        if s is SchemeId.GSS:
            return ceil_div(remaining, p)
        if s is SchemeId.TSS:
            raw = _round_half_up(d["tss_first"] - issued * d["tss_delta"])
            return min(remaining, max(1, raw))
        if s is SchemeId.FAC2:
            batch = issued // p
            return ceil_div(n, (2 ** (batch + 1)) * p)
        if s is SchemeId.TFSS:
            batch = issued // p
            raw = math.ceil(d["tss_first"] - d["tss_delta"] * (batch * p + (p - 1) / 2.0))
            return min(remaining, max(1, raw))
        if s is SchemeId.FISS:
            stage = min(issued // p, self.params.fiss_stages - 1)
            return int(d["init_chunk"]) + stage * int(d["bump"])
        if s is SchemeId.VISS:
            stage = min(issued // p, self.params.fiss_stages - 1)
            c0 = int(d["init_chunk"])
            size = c0
            for b in range(1, stage + 1):
                size += ceil_div(c0, 2**b)
            return size
        if s is SchemeId.PLS:
            if issued < p:
                return int(d["static_chunk"])
            return ceil_div(remaining, p)
        if s is SchemeId.PSS:
            return math.ceil(remaining / (self.params.pss_factor * p))
        raise InvalidParams(f"no size rule for scheme {s}")

    # -- public surface -----------------------------------------------------

    @property
    def remaining(self) -> int:
        return self.total_rows - self._next_start

    @property
    def issued(self) -> int:
        return self._issued

    @property
    def next_start(self) -> int:
        return self._next_start

    def next_chunk(self) -> Optional[ChunkRange]:
        """Issue the next chunk, or None once the range is exhausted."""
        with self._lock:
            remaining = self.total_rows - self._next_start
            if remaining == 0:
                return None
            raw = self._raw_size(remaining, self._issued)
            size = min(remaining, max(self.min_chunk, raw))
            chunk = ChunkRange(self._next_start, size)
            self._next_start += size
            self._issued += 1
            return chunk

    def update(self, params: Optional[SchemeParams] = None) -> None:
        """Re-parameterization hook.

        No current scheme consumes runtime feedback, so this only swaps
        in (after validating) a new parameter set for future requests.
        Derived constants are frozen at construction and stay fixed.
        """
        if params is not None:
            params.validate()
            self.params = params
        else:
            self.params.validate()


def chunk_sequence(
    scheme: SchemeId,
    total_rows: int,
    workers: int,
    params: Optional[SchemeParams] = None,
    min_chunk: int = 1,
) -> list[int]:
    """Full chunk-size sequence a fresh partitioner would emit, in order.

    Side-effect free: drains a private instance.  The sum of the result
    always equals total_rows.
    """
    part = Partitioner(scheme, total_rows, workers, params, min_chunk)
    sizes: list[int] = []
    while True:
        c = part.next_chunk()
        if c is None:
            return sizes
        sizes.append(c.size)

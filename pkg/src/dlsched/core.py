"""Shared vocabulary for the runtime: identifiers, topology, tasks, config.

Everything downstream (partitioning, queueing, the worker pool, the
simulator, the CLI) builds on the types defined here.  Values are
immutable once constructed; invalid combinations are rejected at
construction time rather than deep inside a worker thread.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional


class SchedulerError(Exception):
    """Base class for all errors raised by this package."""


class UnknownScheme(SchedulerError):
    """A scheme, layout, or victim-strategy name did not match any known id."""


class InvalidParams(SchedulerError):
    """Scheme parameters outside their legal range."""


class InvalidConfig(SchedulerError):
    """A structurally broken configuration (topology, layout misuse, ...)."""


class ParseError(SchedulerError):
    """Malformed input data; carries the 1-based line number when known."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class NotConverged(SchedulerError):
    """An iterative kernel hit its iteration cap before reaching a fixpoint."""


class SingularSystem(SchedulerError):
    """A linear system whose matrix is not positive definite."""


class DegenerateInput(SchedulerError):
    """Statistics requested on input where they are undefined (e.g. zero mean)."""


class InvalidCore(SchedulerError):
    """A pinning request named a logical core that does not exist."""


class WorkerPanic(SchedulerError):
    """A worker thread raised; wraps the first underlying exception."""

    def __init__(self, message: str, cause: Optional[BaseException] = None, report=None):
        super().__init__(message)
        self.cause = cause
        self.report = report


class SchemeId(enum.Enum):
    """The eleven supported chunk-size calculation schemes."""

    STATIC = "STATIC"
    SS = "SS"
    MFSC = "MFSC"
    GSS = "GSS"
    TSS = "TSS"
    FAC2 = "FAC2"
    TFSS = "TFSS"
    FISS = "FISS"
    VISS = "VISS"
    PLS = "PLS"
    PSS = "PSS"


class LayoutId(enum.Enum):
    """How the task queues are laid out relative to the workers."""

    CENTRALIZED = "CENTRALIZED"
    PER_WORKER = "PER_WORKER"
    PER_GROUP = "PER_GROUP"


class VictimStrategy(enum.Enum):
    """Order in which a thief probes other queues when its own runs dry.

    SEQ scans queues in ring order starting after the thief's own.
    SEQPRI scans the thief's own group first, then the rest in ring order.
    RND probes a seeded random permutation of all other queues.
    RNDPRI is RND restricted to the group first, then the remainder.
    """

    SEQ = "SEQ"
    SEQPRI = "SEQPRI"
    RND = "RND"
    RNDPRI = "RNDPRI"


def _parse_enum(cls, text: str, what: str):
    if not isinstance(text, str):
        raise UnknownScheme(f"{what} name must be a string, got {type(text).__name__}")
    try:
        return cls[text.strip().upper()]
    except KeyError:
        known = ", ".join(m.name for m in cls)
        raise UnknownScheme(f"unknown {what} {text!r}; expected one of: {known}") from None


def parse_scheme(text: str) -> SchemeId:
    """Case-insensitive lookup of a scheme name."""
    return _parse_enum(SchemeId, text, "scheme")


def parse_layout(text: str) -> LayoutId:
    return _parse_enum(LayoutId, text, "layout")


def parse_victim(text: str) -> VictimStrategy:
    return _parse_enum(VictimStrategy, text, "victim strategy")


def format_id(member: enum.Enum) -> str:
    """Canonical textual form; round-trips through the parse functions."""
    return member.name


@dataclass(frozen=True)
class Topology:
    """Workers plus their partition into locality groups.

    ``groups`` is a tuple of tuples of worker ids.  Every worker id in
    ``range(worker_count)`` must appear in exactly one group.  ``pin_map``
    optionally assigns a logical core per worker (index = worker id).
    """

    worker_count: int
    groups: tuple[tuple[int, ...], ...]
    pin_map: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.worker_count < 1:
            raise InvalidConfig(f"worker_count must be >= 1, got {self.worker_count}")
        if len(self.groups) < 1:
            raise InvalidConfig("topology needs at least one group")
        seen: set[int] = set()
        for g, members in enumerate(self.groups):
            if len(members) == 0:
                raise InvalidConfig(f"group {g} is empty")
            for w in members:
                if not 0 <= w < self.worker_count:
                    raise InvalidConfig(f"group {g} names worker {w} outside range(0, {self.worker_count})")
                if w in seen:
                    raise InvalidConfig(f"worker {w} appears in more than one group")
                seen.add(w)
        if len(seen) != self.worker_count:
            missing = sorted(set(range(self.worker_count)) - seen)
            raise InvalidConfig(f"workers {missing} belong to no group")
        if self.pin_map is not None and len(self.pin_map) != self.worker_count:
            raise InvalidConfig(
                f"pin_map has {len(self.pin_map)} entries for {self.worker_count} workers"
            )

    @property
    def group_count(self) -> int:
        return len(self.groups)

    def group_of(self, worker: int) -> int:
        for g, members in enumerate(self.groups):
            if worker in members:
                return g
        raise InvalidConfig(f"worker {worker} not in topology")

    @classmethod
    def single_group(cls, worker_count: int, pin_map: Optional[tuple[int, ...]] = None) -> "Topology":
        return cls(worker_count, (tuple(range(worker_count)),), pin_map)

    @classmethod
    def grouped(
        cls,
        group_count: int,
        group_size: int,
        pin_map: Optional[tuple[int, ...]] = None,
    ) -> "Topology":
        """Contiguous groups of equal size: group g owns [g*size, (g+1)*size)."""
        if group_count < 1 or group_size < 1:
            raise InvalidConfig("group_count and group_size must be >= 1")
        w = group_count * group_size
        groups = tuple(
            tuple(range(g * group_size, (g + 1) * group_size)) for g in range(group_count)
        )
        return cls(w, groups, pin_map)


@dataclass(frozen=True)
class RowRange:
    """A contiguous half-open span of row indices [start, start+length)."""

    start: int
    length: int

    def __post_init__(self):
        if self.start < 0:
            raise InvalidConfig(f"RowRange.start must be >= 0, got {self.start}")
        if self.length < 1:
            raise InvalidConfig(f"RowRange.length must be >= 1, got {self.length}")

    @property
    def stop(self) -> int:
        return self.start + self.length


@dataclass(frozen=True)
class Task:
    """One schedulable unit: a row span bound to a kernel operation.

    ``seq_no`` is the global creation order across all queues and is
    what makes reductions deterministic.  ``origin_group`` records which
    locality group the task was enqueued for (None for a shared queue).
    """

    rows: RowRange
    op_id: str
    seq_no: int
    origin_group: Optional[int] = None


@dataclass(frozen=True)
class SchemeParams:
    """Tunables consumed by individual schemes; defaults match common usage."""

    fiss_stages: int = 4
    pls_swr: float = 0.5
    pss_factor: float = 1.5
    tss_last: int = 1

    def validate(self) -> None:
        if self.fiss_stages < 2:
            raise InvalidParams(f"fiss_stages must be >= 2, got {self.fiss_stages}")
        if not 0.0 < self.pls_swr <= 1.0:
            raise InvalidParams(f"pls_swr must be in (0, 1], got {self.pls_swr}")
        if self.pss_factor <= 0.0:
            raise InvalidParams(f"pss_factor must be > 0, got {self.pss_factor}")
        if self.tss_last < 1:
            raise InvalidParams(f"tss_last must be >= 1, got {self.tss_last}")


@dataclass(frozen=True)
class SchedConfig:
    """Complete description of one scheduling configuration."""

    scheme: SchemeId
    layout: LayoutId
    victim: VictimStrategy
    topology: Topology
    min_chunk: int = 1
    params: SchemeParams = field(default_factory=SchemeParams)
    rng_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.scheme, SchemeId):
            raise InvalidConfig(f"scheme must be a SchemeId, got {self.scheme!r}")
        if not isinstance(self.layout, LayoutId):
            raise InvalidConfig(f"layout must be a LayoutId, got {self.layout!r}")
        if not isinstance(self.victim, VictimStrategy):
            raise InvalidConfig(f"victim must be a VictimStrategy, got {self.victim!r}")
        if self.min_chunk < 1:
            raise InvalidConfig(f"min_chunk must be >= 1, got {self.min_chunk}")
        self.params.validate()

    @property
    def workers(self) -> int:
        return self.topology.worker_count

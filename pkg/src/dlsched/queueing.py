"""Task queues: materialization, acquisition, and stealing.

build_queues() turns a partitioner's chunk stream into Task objects and
places them according to the configured layout:

  CENTRALIZED  one shared FIFO queue, one partitioner over [0, N), P = W
  PER_WORKER   one queue per worker; the single global chunk stream is
               dealt round-robin by seq_no (no pre-partitioning)
  PER_GROUP    the row space is pre-split into G contiguous blocks of
               ceil(N/G); each block gets its own partitioner sized to
               that group's worker count

Workers pop their home queue FIFO.  Thieves take one task per steal:
from the far end of a per-worker queue (opposite the owner), from the
FIFO end otherwise.  Occupancy counts are hints only; the steal itself
re-checks emptiness under the queue lock.
"""

from __future__ import annotations

import enum
import threading
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .core import (
    InvalidConfig,
    LayoutId,
    RowRange,
    SchedConfig,
    Task,
    Topology,
    VictimStrategy,
)
from .partitioner import Partitioner, ceil_div


class QueueSignal(enum.Enum):
    """Non-task outcomes of acquire()."""

    NEED_STEAL = "NEED_STEAL"
    DONE = "DONE"


NEED_STEAL = QueueSignal.NEED_STEAL
DONE = QueueSignal.DONE

AcquireResult = Union[Task, QueueSignal]


@dataclass(frozen=True)
class StealEvent:
    thief: int
    victim_queue: int
    task_seq: int
    attempt_count: int


@dataclass(frozen=True)
class ProbeRecord:
    """One steal decision: what the thief saw and what it picked."""

    thief: int
    home_queue: int
    occupancy: tuple[int, ...]
    order: tuple[int, ...]
    chosen: Optional[int]


def _infer_home(topology: Topology, queue_count: int, thief: int) -> int:
    if queue_count == topology.worker_count:
        return thief
    if queue_count == topology.group_count:
        return topology.group_of(thief)
    raise InvalidConfig(
        f"cannot map thief {thief} to a home queue among {queue_count} queues"
    )


def _queue_groups(topology: Topology, queue_count: int) -> list[int]:
    if queue_count == topology.worker_count:
        return [topology.group_of(w) for w in range(queue_count)]
    if queue_count == topology.group_count:
        return list(range(queue_count))
    raise InvalidConfig(f"queue count {queue_count} matches neither workers nor groups")


def victim_probe_order(
    strategy: VictimStrategy,
    thief: int,
    topology: Topology,
    queue_count: int,
    rng=None,
    home: Optional[int] = None,
    queue_groups: Optional[Sequence[int]] = None,
) -> list[int]:
    """The full queue probe order for one steal attempt (home excluded).

    SEQ walks the ring starting at home+1.  The PRI variants list the
    thief's own group's queues first.  RND/RNDPRI shuffle with the
    caller-supplied per-thief generator, so orders are reproducible.
    """
    q = queue_count
    if home is None:
        home = _infer_home(topology, q, thief)
    if queue_groups is None:
        queue_groups = _queue_groups(topology, q)
    my_group = queue_groups[home]
    ring = [(home + 1 + i) % q for i in range(q - 1)]

    if strategy is VictimStrategy.SEQ:
        return ring
    if strategy is VictimStrategy.SEQPRI:
        same = [i for i in ring if queue_groups[i] == my_group]
        rest = [i for i in ring if queue_groups[i] != my_group]
        return same + rest
    if rng is None:
        raise InvalidConfig(f"{strategy.name} requires a seeded rng")
    if strategy is VictimStrategy.RND:
        order = [i for i in range(q) if i != home]
        rng.shuffle(order)
        return order
    if strategy is VictimStrategy.RNDPRI:
        same = [i for i in range(q) if i != home and queue_groups[i] == my_group]
        rest = [i for i in range(q) if i != home and queue_groups[i] != my_group]
        rng.shuffle(same)
        rng.shuffle(rest)
        return same + rest
    raise InvalidConfig(f"unhandled victim strategy {strategy!r}")


def _first_occupied(order: Sequence[int], occupancy: Sequence[int]) -> tuple[Optional[int], int]:
    probes = 0
    for idx in order:
        probes += 1
        if occupancy[idx] > 0:
            return idx, probes
    return None, probes


def select_victim(
    strategy: VictimStrategy,
    thief: int,
    topology: Topology,
    occupancy: Sequence[int],
    rng=None,
    home: Optional[int] = None,
    queue_groups: Optional[Sequence[int]] = None,
) -> tuple[Optional[int], int]:
    """First queue with work under the strategy's probe order.

    Returns (queue index, probes used); (None, probes) when every
    candidate was empty.  Pure with respect to the queue system: it
    only reads the occupancy snapshot it is given.
    """
    order = victim_probe_order(
        strategy, thief, topology, len(occupancy), rng, home, queue_groups
    )
    return _first_occupied(order, occupancy)


class QueueSystem:
    """Layout-specific task queues plus completion bookkeeping.

    All mutating entry points are linearizable: each queue has its own
    lock and the remaining-task counter sits behind a condition
    variable.  A task is delivered to exactly one caller.
    """

    def __init__(self, cfg: SchedConfig, tasks_per_queue: list[list[Task]]):
        self.cfg = cfg
        self.layout = cfg.layout
        self.topology = cfg.topology
        self.queues: list[deque[Task]] = [deque(ts) for ts in tasks_per_queue]
        self._locks = [threading.Lock() for _ in self.queues]
        self.total_tasks = sum(len(ts) for ts in tasks_per_queue)
        self.total_rows = sum(t.rows.length for ts in tasks_per_queue for t in ts)
        self._remaining = self.total_tasks
        self._cond = threading.Condition()
        self._aborted = False
        w = self.topology.worker_count
        if self.layout is LayoutId.CENTRALIZED:
            self.owner_map = [0] * w
            self.queue_groups: list[Optional[int]] = [None]
        elif self.layout is LayoutId.PER_WORKER:
            self.owner_map = list(range(w))
            self.queue_groups = [self.topology.group_of(i) for i in range(w)]
        else:
            self.owner_map = [self.topology.group_of(i) for i in range(w)]
            self.queue_groups = list(range(self.topology.group_count))
        self.worker_groups = [self.topology.group_of(i) for i in range(w)]
        self.steal_events: list[StealEvent] = []
        self.probe_log: list[ProbeRecord] = []
        self._event_lock = threading.Lock()
        self.group_blocks: list[tuple[int, int]] = []

    # -- queries ------------------------------------------------------------

    @property
    def remaining_global(self) -> int:
        return self._remaining

    def occupancy(self) -> list[int]:
        """Per-queue task counts; a hint, racing pops may invalidate it."""
        return [len(q) for q in self.queues]

    # -- worker-facing operations --------------------------------------------

    def acquire(self, worker: int, block: bool = True) -> AcquireResult:
        """Pop the worker's home queue, or say what to do instead.

        Empty home queue: NEED_STEAL under a stealable layout, DONE once
        every task completed.  Under CENTRALIZED an empty queue with
        work still in flight blocks until completion (or, with
        block=False, reports DONE early; used by the single-threaded
        simulator which never has in-flight tasks at that point).
        """
        if not 0 <= worker < self.topology.worker_count:
            raise InvalidConfig(f"worker {worker} out of range")
        qi = self.owner_map[worker]
        with self._locks[qi]:
            if self.queues[qi]:
                return self.queues[qi].popleft()
        if self._remaining == 0 or self._aborted:
            return DONE
        if self.layout is not LayoutId.CENTRALIZED:
            return NEED_STEAL
        if not block:
            return DONE
        with self._cond:
            while self._remaining > 0 and not self._aborted:
                self._cond.wait(timeout=0.05)
        return DONE

    def steal(self, thief: int, victim_queue: int, probes: int = 1) -> Optional[Task]:
        """Take one task from a queue that is not the thief's home.

        PER_WORKER queues are robbed from the end opposite the owner's
        pops; group/shared queues from the FIFO end.  None means the
        queue drained between selection and steal (a normal race).
        """
        if victim_queue == self.owner_map[thief]:
            raise InvalidConfig(f"worker {thief} cannot steal from its own home queue")
        if not 0 <= victim_queue < len(self.queues):
            raise InvalidConfig(f"victim queue {victim_queue} out of range")
        with self._locks[victim_queue]:
            if not self.queues[victim_queue]:
                return None
            if self.layout is LayoutId.PER_WORKER:
                task = self.queues[victim_queue].pop()
            else:
                task = self.queues[victim_queue].popleft()
        with self._event_lock:
            self.steal_events.append(StealEvent(thief, victim_queue, task.seq_no, probes))
        return task

    def steal_attempt(self, thief: int, rng=None) -> Optional[Task]:
        """One full victim-selection round: probe, pick, steal, log."""
        home = self.owner_map[thief]
        order = victim_probe_order(
            self.cfg.victim,
            thief,
            self.topology,
            len(self.queues),
            rng,
            home=home,
            queue_groups=[g if g is not None else 0 for g in self.queue_groups],
        )
        occ = self.occupancy()
        victim, probes = _first_occupied(order, occ)
        with self._event_lock:
            self.probe_log.append(
                ProbeRecord(thief, home, tuple(occ), tuple(order), victim)
            )
        if victim is None:
            return None
        return self.steal(thief, victim, probes)

    def task_done(self, task: Task) -> None:
        with self._cond:
            if self._remaining <= 0:
                raise InvalidConfig("task_done called with no tasks outstanding")
            self._remaining -= 1
            if self._remaining == 0:
                self._cond.notify_all()

    def abort(self) -> None:
        """Unblock everyone; subsequent acquires return DONE."""
        with self._cond:
            self._aborted = True
            self._cond.notify_all()


def build_queues(cfg: SchedConfig, total_rows: int, op_id: str = "op") -> QueueSystem:
    """Materialize every task for one execution phase into fresh queues."""
    if total_rows < 1:
        raise InvalidConfig(f"total_rows must be >= 1, got {total_rows}")
    topo = cfg.topology
    w = topo.worker_count

    if cfg.layout is LayoutId.CENTRALIZED:
        part = Partitioner(cfg.scheme, total_rows, w, cfg.params, cfg.min_chunk)
        tasks: list[Task] = []
        seq = 0
        while True:
            c = part.next_chunk()
            if c is None:
                break
            tasks.append(Task(RowRange(c.start, c.size), op_id, seq, None))
            seq += 1
        return QueueSystem(cfg, [tasks])

    if cfg.layout is LayoutId.PER_WORKER:
        part = Partitioner(cfg.scheme, total_rows, w, cfg.params, cfg.min_chunk)
        per_queue: list[list[Task]] = [[] for _ in range(w)]
        seq = 0
        while True:
            c = part.next_chunk()
            if c is None:
                break
            owner = seq % w
            per_queue[owner].append(
                Task(RowRange(c.start, c.size), op_id, seq, topo.group_of(owner))
            )
            seq += 1
        return QueueSystem(cfg, per_queue)

    # PER_GROUP: contiguous blocks of ceil(N/G), one partitioner per group
    g_count = topo.group_count
    block = ceil_div(total_rows, g_count)
    per_group: list[list[Task]] = [[] for _ in range(g_count)]
    blocks: list[tuple[int, int]] = []
    seq = 0
    for g in range(g_count):
        start = g * block
        size = min(block, total_rows - start)
        if size <= 0:
            blocks.append((start, 0))
            continue
        blocks.append((start, size))
        part = Partitioner(
            cfg.scheme, size, len(topo.groups[g]), cfg.params, cfg.min_chunk
        )
        while True:
            c = part.next_chunk()
            if c is None:
                break
            per_group[g].append(Task(RowRange(start + c.start, c.size), op_id, seq, g))
            seq += 1
    qs = QueueSystem(cfg, per_group)
    qs.group_blocks = blocks
    return qs

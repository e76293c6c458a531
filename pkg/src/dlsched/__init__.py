"""Self-scheduling task runtime: schemes, queues, stealing, pipelines."""

from .core import (
    DegenerateInput,
    InvalidConfig,
    InvalidCore,
    InvalidParams,
    LayoutId,
    NotConverged,
    ParseError,
    RowRange,
    SchedConfig,
    SchedulerError,
    SchemeId,
    SchemeParams,
    SingularSystem,
    Task,
    Topology,
    UnknownScheme,
    VictimStrategy,
    WorkerPanic,
    format_id,
    parse_layout,
    parse_scheme,
    parse_victim,
)
from .data import (
    CostVector,
    CsrMatrix,
    EdgeList,
    build_csr,
    compact_ids,
    gen_costs,
    gen_graph,
    parse_edge_list,
    scale_up,
    symmetrize_dedup,
)
from .partitioner import ChunkRange, Partitioner, chunk_sequence
from .pipelines import (
    RegressionModel,
    cc_iterate_block,
    cc_serial,
    connected_components,
    connected_components_run,
    gram_block,
    linreg_train,
    linreg_train_run,
    solve_spd,
)
from .queueing import (
    DONE,
    NEED_STEAL,
    ProbeRecord,
    QueueSignal,
    QueueSystem,
    StealEvent,
    build_queues,
    select_victim,
    victim_probe_order,
)
from .simcore import SimConfig, simulate, sweep
from .telemetry import (
    ChunkEvent,
    ImbalanceStats,
    RunReport,
    imbalance,
    read_summary_csv,
    write_chunk_csv,
    write_csv,
    write_steal_csv,
)
from .workerpool import PinResult, WorkerLoopStats, pin_worker, run_pool

__version__ = "0.1.0"

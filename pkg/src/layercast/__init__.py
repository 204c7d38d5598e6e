"""Radio-network protocol simulator and multi-message communication suite.

Synchronous radio model without collision detection, the exponent-scheduled
flooding broadcast, collision-free layering constructions with executable
validators, wave-pipelined gathering, network-coded multi-message broadcast,
gossip pipelines, and a desk-scale experiment harness.
"""

from .bc import BcParams, DensityReport, bc_value, check_density
from .build import (
    ConstructionError,
    basic_layering,
    build_pseudo_bfs,
    refine_lra,
    refine_recursive,
)
from .coding import (
    CodedPacket,
    IntegrityError,
    NcConfig,
    NcResult,
    PacketStore,
    decode,
    gf2_rank,
    knows_projection,
    nc_broadcast,
    xor_combine,
)
from .crbc import CrConfig, CrResult, cr_broadcast, cr_phase_count
from .gathering import (
    GatherConfig,
    GatherError,
    GatherIncomplete,
    GatherPacket,
    GatherResult,
    WaveCapExceeded,
    gather,
    gather_epoch_bound,
)
from .graph import GraphError, RadioGraph, diameter, read_graph, write_graph
from .harness import (
    ExperimentSpec,
    FitResult,
    MetricsRow,
    SpecError,
    SweepPoint,
    fit_scaling,
    read_metrics,
    run_experiment,
    write_metrics,
)
from .layering import (
    Layering,
    LayeringReport,
    bfs_layering,
    mod_coloring,
    read_layering,
    validate,
    write_layering,
)
from .pipelines import (
    GenerationError,
    PipelineResult,
    generate_graph,
    gnp_threshold_probability,
    gossip,
    multi_source_broadcast,
)
from .sim import (
    LISTEN,
    HeaderBudgetError,
    Machine,
    MachineFault,
    NodeAction,
    Packet,
    Reception,
    RoundOutcome,
    RoundTrace,
    SimulationError,
    header_budget,
    replay_check,
    run_protocol,
    step,
    transmit,
    transmit_step,
)

__version__ = "0.1.0"

"""Deterministic simulator and detection library for layer-wise,
graph-based intrusion detection in wireless cells."""

from .attack import (
    AttackConstants,
    AttackError,
    AttackKind,
    AttackSpec,
    GroundTruth,
    InapplicableAttackError,
    UnknownTargetError,
    apply_attack,
    apply_attacks,
)
from .channel import (
    BoundsEnvelope,
    ChannelError,
    ChannelParams,
    LinkBudget,
    NodeBudget,
    capacity_bps,
    energy_efficiency,
    extra_loss_db,
    free_space_pathloss_db,
    link_bounds,
    link_budget,
    secrecy_rate_bps,
    snr_linear,
)
from .detector import (
    Breach,
    DetectionFlag,
    DetectionReport,
    DetectorError,
    InvalidEnvelopeError,
    MissingBudgetError,
    RemediationPhase,
    RemediationState,
    ScreeningEntry,
    ScreeningResult,
    full_scan,
    range_cross,
    run_lgtbids,
    screen_layers,
)
from .metrics import (
    ConfusionCounts,
    FlagTruthMismatchError,
    LengthMismatchError,
    MetricsError,
    MetricSuite,
    TrialSummary,
    aggregate,
    metric_suite,
    score,
    summarize,
)
from .runner import RunArtifacts, RunnerError, emit, run, to_document
from .scenario import (
    EavesdropperSpec,
    RandomAttackTemplate,
    Scenario,
    ScenarioError,
    fixture_path,
    load_scenario,
    parse_scenario,
    serialize_scenario,
)
from .topology import (
    DanglingEdgeError,
    DuplicateBaseStationError,
    Edge,
    IntraLayerEdgeError,
    IsBaseStationError,
    LayeredTopology,
    NoBaseStationError,
    Node,
    NodeKind,
    NoInboundEdgeError,
    TopologyError,
    UnknownLeaveIdError,
    UnreachableNodeError,
    build_topology,
    edge_list_rows,
    parent_edge,
    update_membership,
)

__version__ = "0.1.0"

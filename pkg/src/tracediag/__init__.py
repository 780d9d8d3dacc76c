"""Metric-trace fault diagnosis: closest-run selection, metric ranking,
region localization and call-stack comparison."""

__version__ = "0.1.0"

from .correlation import (
    CorrelationVector,
    Window,
    WindowConfig,
    WindowDistance,
    WindowKey,
    correlation_vector,
    correlation_vectors,
    make_windows,
    nn_distances,
    pearson,
    window_distance,
)
from .diagnosis import (
    DiagnosisConfig,
    MetricScore,
    RegionScore,
    localize_regions,
    rank_metrics,
    top_anomalous_windows,
)
from .errors import (
    EmptyInput,
    InvalidFault,
    InvalidRun,
    LengthMismatch,
    NoComparableWindows,
    ParseError,
    SchemaMismatch,
    TraceError,
    UnknownMetric,
    WindowTooSmall,
)
from .estimators import ClosestRunSelector, CorrelationProfiler, MetricRanker, StackComparator
from .model import EventKind, Frame, MetricSchema, Run, TraceEvent, Violation, extract_series, validate_run
from .selection import SelectionResult, SelectorConfig, score_runs, select_closest_run
from .stacks import (
    CallStack,
    StackConfig,
    StackPair,
    StackRecord,
    collect_region_stacks,
    disjoint_stacks,
    reconstruct_stacks,
    recursive_pairs,
    repetitive_pairs,
)
from .synth import FaultSpec, GenConfig, generate_normal, inject_fault, make_fixture
from .trace_io import FaultManifest, load_manifest, parse_trace, read_trace, save_trace, write_trace

"""Finite-window analysis toolkit for symbolic dynamics on countable digraphs."""

from .netgraph import (
    Ball,
    Digraph,
    DimensionEstimate,
    INFINITE_DISTANCE,
    Subisometry,
    biconnected_probe,
    cayley_zd,
    cayley_zdne,
    counterexample_graph,
    dim_estimate,
    explicit_graph,
    graph_from_descriptor,
    in_ball,
    is_estuary,
    odometer_graph,
    shift_tau,
    shortcut_graph,
    speed_estimate,
    superlinear_check,
    undirected_distance,
    unit_shift_graph,
    unit_shift_graph_z,
    upstream,
)
from .symsys import (
    Alphabet,
    Configuration,
    LightCone,
    LocalRule,
    PanoramaResult,
    PatternSpace,
    SymbolicSystem,
    ca_on_zd,
    check_proper,
    equicontinuity_envelope,
    evaluate,
    full_shift,
    light_cone,
    odometer_factor_chain,
    odometer_system,
    panorama,
    posexpansive_window_check,
    propagation,
    sensitivity_certificate,
    shift_extension,
    subsymmetry_check,
    system_from_descriptor,
)
from .entropydim import (
    EntropyEstimate,
    ball_entropy,
    pattern_log_count,
    tau_entropy_profile,
    weak_independence_report,
)
from .counterexample import (
    DecodeResult,
    Trace,
    cex_network,
    cex_propagation_profile,
    cex_roundtrip,
    cex_rules,
    cex_space,
    decode_trace,
    guaranteed_cone_cells,
    junction_index,
    junction_rank,
    random_initial,
    roundtrip_mismatches,
    simulate_trace,
)
from .metricspace import (
    BasedMetric,
    CoefficientScheme,
    DistanceBound,
    dist,
    holder_report,
    image_configuration,
    lipschitz_report,
    metric_dim_estimate,
    metric_from_descriptor,
    pseudo_dist,
    single_estuary_metric,
    uniform_dim_profile,
)

__version__ = "0.1.0"

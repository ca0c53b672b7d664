"""Homophily measures, linear-GCN propagation and separability theory for
discrete-time dynamic graphs."""

from .analysis import auroc, correlate_series, evaluate_timesteps, spearman, validate_theory
from .epidemics import PlantedConfig, SIConfig, gen_planted, generate_structure, simulate_si
from .graph import EventStream, GraphError, Snapshot, TemporalGraph, build_snapshot, window_discretize
from .homophily import (
    CompatibilityMatrix,
    HomophilyLevels,
    class_dynamic_homophily,
    compatibility_matrix,
    dynamic_homophily,
    static_homophily,
)
from .propagation import Representations, gcn_forward, gcn_layer
from .theory import (
    TheoryParams,
    auroc_upper_bound,
    distance_concentration,
    expected_distance,
    gaussian_cdf,
    variance_bounds,
)

__version__ = "0.1.0"

"""Credit scoring on dynamic homophily networks.

Simulates true creditworthiness, forms score-similarity networks, and runs
two closed-form Bayesian estimation schemes (a risk-prediction filter and a
recursive scoring loop), with a Monte Carlo harness for bias/variance/MSE
and CRLB comparisons.
"""

from .experiments import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    compare_n,
    preset_config,
    run_experiment,
    run_replication,
)
from .filtering import FilterState, fuse_gaussians, gains, predict, run_filter, update
from .interaction import (
    BoundNotApplicableError,
    InteractionState,
    PrecisionBounds,
    correct,
    precision_bounds,
    prediction_bound,
    publish,
    run_interaction,
)
from .metrics import McSummary, aggregate, crlb, fisher_information
from .model import (
    ClientTruth,
    GaussianBelief,
    ModelParams,
    ParameterError,
    ReplicationStreams,
    Trajectory,
    init_belief,
    init_population,
    observe,
    step_truth,
)
from .network import (
    NetworkSnapshot,
    connection_probability,
    edge_list,
    neighbors,
    sample_network,
)

__version__ = "0.1.0"

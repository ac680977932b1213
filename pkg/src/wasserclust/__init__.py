"""Dynamic clustering of histogram data with adaptive squared Wasserstein distances."""

from .clustering import (
    ClusteringResult,
    Partition,
    allocate,
    compute_prototype,
    criterion,
    prototypes_for,
    run_dca,
    update_weights_cdc,
    update_weights_gc,
)
from .evaluation import (
    InertiaBreakdown,
    QpiReport,
    accuracy,
    ch_index,
    corrected_rand,
    general_prototype,
    inertia,
    qpi,
)
from .histogram import (
    Histogram,
    HistogramMatrix,
    build_from_bins,
    build_from_samples,
    center,
    common_refinement,
    moments,
    quantile,
)
from .pearson import MomentSpec, pearson_sample
from .synthgen import ExperimentConfig, builtin_config, generate_dataset, load_config, run_monte_carlo
from .wasserstein import (
    DistanceDecomposition,
    Scheme,
    WeightSystem,
    adaptive_dist2,
    decompose,
    dist2,
    multivar_dist2,
    r_qq,
)

__version__ = "0.1.0"

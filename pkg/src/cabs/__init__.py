"""Linear-cost matrix sketching by cascaded bilateral sampling."""
from .bench import BenchRecord, DatasetSpec, bench_run, emit
from .diagnostics import (
    BoundConfig,
    BoundReport,
    bound_report,
    correlation_experiment,
    estimate_theta,
    theorem1_bound,
    theorem2_gap,
)
from .matcore import ALL, IndexSet, MatrixSource, Sketch, pinv_truncated, relative_error, thin_svd
from .mmio import load_matrix, load_matrix_market
from .pipeline import CabsConfig, CabsOutcome, cabs_run, validate_rank
from .samplers import (
    WeightFn,
    hard_threshold_select,
    leverage_sample,
    uniform_indices,
    weighted_kmeans,
)
from .sketchers import (
    RandomProjectionConfig,
    br_cur,
    cur_full,
    nystrom,
    orthogonalize,
    pseudo_skeleton,
    random_projection_sketch,
    sample_triple,
    sketch_cur,
    stabilized_sketch,
)
from .synthetic import gen_synthetic, lowrank, rbf_psd, sparse_lowrank

__version__ = "0.1.0"

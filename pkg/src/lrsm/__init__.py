"""Low-rank-plus-sparse matrix recovery under arbitrary noise.

The package provides the incoherence-constrained least-squares solver, an
end-to-end Markov transition-kernel estimation pipeline, application
estimators (multitask regression, robust structured covariance), seeded
synthetic generators, and an experiment harness with CSV output.
"""

from .errors import NumericError, StructureError
from .matops import (
    FactoredLowRank,
    IncoherenceReading,
    MatrixNorms,
    SeparationReading,
    SparseEntrySet,
    adversarial_pair,
    hard_threshold,
    incoherence,
    load_dense_csv,
    load_sparse_csv,
    matrix_sign,
    norms,
    project_rows_incoherent,
    project_simplex,
    save_dense_csv,
    save_sparse_csv,
    separation_ratio,
    thin_svd,
)
from .solver import (
    CertificateResult,
    SolverConfig,
    SolverReport,
    SolverState,
    certificate_check,
    objective,
    profiled_objective,
    solve,
)
from .markov import (
    conditional_mean,
    empirical_frequency,
    estimate_from_frequency,
    estimate_transition,
    frequency_to_transition,
    mixing_time,
    pair_chain,
    simulate_chain,
    spectral_baseline,
    stationary_distribution,
)
from .applications import (
    CovarianceEstimate,
    MultitaskDiagnostics,
    align_signs,
    estimate_loadings,
    multitask_fit,
    structured_covariance,
    winsorized_covariance,
)
from .synth import (
    InstanceSpec,
    gen_lowrank_sparse,
    gen_transition,
    noise_empirical_prob,
    noise_gaussian,
    random_incoherent_pair,
)
from .harness import ExperimentSpec, MetricsRow, run as run_experiment

__version__ = "0.1.0"

"""Graph-based semi-supervised learning with quantum-state diagnostics.

The package pairs a damped, source-driven label-propagation solver on
kNN similarity graphs with a dense statevector simulator: label iterates
are amplitude-encoded and evolved by the orthogonal factor of the graph
matrix, with entanglement entropy and state fidelity recorded along the
way.  Randomized benchmarking, hyperparameter sweeps, classification
metrics, and a reproducible experiment harness (plus the ``qgssl``
command-line entry point) sit on top.
"""

from .benchmarking import (
    DEFAULT_RB_LENGTHS,
    RBResult,
    SweepRow,
    average_fidelity,
    clifford_group_1q,
    error_per_clifford,
    fit_decay,
    rb_experiment,
    rb_score,
    sweep,
    write_sweep_csv,
)
from .graph import (
    Dataset,
    SimilarityGraph,
    SpectralEstimate,
    build_knn_graph,
    load_dataset,
    mask_labels,
    spectral_radius,
    standardize_features,
)
from .harness import (
    BUILTIN_DATASETS,
    DATA_DIR_ENV,
    METHODS,
    ExperimentConfig,
    data_root,
    make_report,
    resolve_dataset,
    result_document,
    run_experiment,
    write_metrics_csv,
    write_result,
)
from .metrics import (
    MetricsReport,
    classification_metrics,
    ks_statistic,
    metrics_report,
    normalize_scores,
    roc_auc_ovr,
    roc_curve_points,
)
from .propagation import (
    DivergenceError,
    LabelMatrix,
    PropagationParams,
    SourceMatrix,
    assign_labels,
    build_source_matrix,
    improved_poisson_learning,
    label_propagation_baseline,
    label_spreading_baseline,
    laplacian_learning,
    poisson_learning,
)
from .qelp import (
    PipelineConfig,
    QuantumDiagnostics,
    hyperparameter_search,
    ilqssl_pipeline,
    ipqssl_pipeline,
    qelp_run,
)
from .qsim import (
    QUBIT_CAP,
    CircuitSpec,
    DensityMatrix,
    StateVector,
    amplitude_encode,
    apply_embedded_unitary,
    build_pqc,
    entanglement_entropy,
    prepare_node_state,
    qr_embed,
    reduced_density_matrix,
    run_circuit,
    state_fidelity,
)
from .results import ARTIFACT_VERSION, SCHEMA_VERSION, ExperimentResult, aggregate_metrics

__version__ = ARTIFACT_VERSION

__all__ = [
    "ARTIFACT_VERSION",
    "BUILTIN_DATASETS",
    "DATA_DIR_ENV",
    "DEFAULT_RB_LENGTHS",
    "METHODS",
    "QUBIT_CAP",
    "SCHEMA_VERSION",
    "CircuitSpec",
    "Dataset",
    "DensityMatrix",
    "DivergenceError",
    "ExperimentConfig",
    "ExperimentResult",
    "LabelMatrix",
    "MetricsReport",
    "PipelineConfig",
    "PropagationParams",
    "QuantumDiagnostics",
    "RBResult",
    "SimilarityGraph",
    "SourceMatrix",
    "SpectralEstimate",
    "StateVector",
    "SweepRow",
    "aggregate_metrics",
    "amplitude_encode",
    "apply_embedded_unitary",
    "assign_labels",
    "average_fidelity",
    "build_knn_graph",
    "build_pqc",
    "build_source_matrix",
    "classification_metrics",
    "clifford_group_1q",
    "data_root",
    "entanglement_entropy",
    "error_per_clifford",
    "fit_decay",
    "hyperparameter_search",
    "ilqssl_pipeline",
    "improved_poisson_learning",
    "ipqssl_pipeline",
    "ks_statistic",
    "label_propagation_baseline",
    "label_spreading_baseline",
    "laplacian_learning",
    "load_dataset",
    "make_report",
    "mask_labels",
    "metrics_report",
    "normalize_scores",
    "poisson_learning",
    "prepare_node_state",
    "qelp_run",
    "qr_embed",
    "rb_experiment",
    "rb_score",
    "reduced_density_matrix",
    "resolve_dataset",
    "result_document",
    "roc_auc_ovr",
    "roc_curve_points",
    "run_circuit",
    "run_experiment",
    "spectral_radius",
    "standardize_features",
    "state_fidelity",
    "sweep",
    "write_metrics_csv",
    "write_result",
    "write_sweep_csv",
]

"""Interactive active learning for patch-pair change detection.

The package turns "which samples should a human label next" into an
optimization over the probability simplex: a convex objective trades
cluster representativity, cluster-mass diversity, classifier ambiguity
and an entropic spread term, and a closed-form multiplicative update
solves it in a handful of sweeps. Around that core sit seeded k-means,
a Pegasos linear classifier, three reference query strategies, dataset
construction and storage, a simulated session runner, a CLI and an HTTP
service for human sessions.
"""

from .baselines import (Strategy, maxmin_select, random_select,
                        uncertainty_select)
from .clustering import (ClusterModel, assignment_matrix, kmeans_fit,
                         medoid_indices, squared_distance_matrix)
from .data import (PatchGrid, SyntheticSpec, extract_patch_pairs,
                   generate_synthetic, load_dataset, load_feature_csv,
                   parse_synthetic_spec, save_dataset)
from .display import (Membership, SolverReport, export_solver_report,
                      fixed_point_update, normalized_exp, objective,
                      objective_gradient, select_top_b, solve)
from .errors import (DataFormatError, DataIOError, FrugalError,
                     InvalidArgument, InvalidState, NumericFailure)
from .session import (ABLATION_ROWS, IterationRecord, MetricsTrace,
                      SessionState, SimulatedOracle, derive_seed,
                      format_ablation_grid, format_eer_grid, init_session,
                      run_ablation, run_fully_supervised, run_simulated,
                      sampling_rate, stratified_split, submit_labels,
                      truncated_pct_string, write_metrics_csv)
from .svm import (LinearModel, decision_scores, evaluate_eer,
                  hinge_objective, hinge_subgradient, load_model,
                  normalize_scores, save_model, scoring_matrix, train_svm)
from .types import (NEGATIVE, POSITIVE, UNKNOWN, Dataset, Hyperparams,
                    LabelVector, ValidationReport, Violation,
                    validate_dataset)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""Structurally interpretable octane-number classification.

The pipeline: parse a SMILES string into a molecular graph, fingerprint it
against a set of substructure patterns, classify the fingerprint with a
random forest, explain single classifications with a local linear surrogate,
and paint the surrogate's weights back onto a 2-D drawing of the molecule.
"""

__version__ = "0.1.0"

from .errors import InputError, ParseError, RonpaintError
from .forest import (
    RON_THRESHOLD,
    Dataset,
    DatasetRow,
    EvaluationResult,
    ForestConfig,
    ForestModel,
    ModelArtifact,
    label_from_ron,
    leave_out_evaluation,
    load_model,
    save_model,
    train_forest,
)
from .lime import (
    Explanation,
    MoleculeWeighting,
    SurrogateConfig,
    bootstrap_weighting,
    explain,
    explanation_payload,
    fit_surrogate,
    sample_perturbations,
)
from .molgraph import Atom, Bond, Molecule, parse_smiles, read_smiles_file
from .painting import (
    AtomScores,
    GridCell,
    Layout,
    LegendEntry,
    compute_layout,
    project_weights,
    render,
    render_grid,
    score_color,
)
from .patterns import (
    FingerprintVector,
    MatchSet,
    Pattern,
    compute_fingerprint,
    default_patterns_path,
    has_match,
    load_patterns,
    match_pattern,
    parse_pattern,
    pattern_set_id,
)
from .stats import (
    BinaryMetrics,
    MetricSummary,
    SpearmanResult,
    TTestResult,
    binary_metrics,
    format_feature_summary,
    format_mean_std,
    per_feature_metrics,
    roc_auc,
    spearman,
    summarize_feature_metrics,
    two_sample_t,
)

__all__ = [
    "__version__",
    "RonpaintError",
    "ParseError",
    "InputError",
    "Atom",
    "Bond",
    "Molecule",
    "parse_smiles",
    "read_smiles_file",
    "Pattern",
    "MatchSet",
    "FingerprintVector",
    "parse_pattern",
    "match_pattern",
    "has_match",
    "compute_fingerprint",
    "pattern_set_id",
    "load_patterns",
    "default_patterns_path",
    "RON_THRESHOLD",
    "label_from_ron",
    "DatasetRow",
    "Dataset",
    "ForestConfig",
    "ForestModel",
    "ModelArtifact",
    "train_forest",
    "leave_out_evaluation",
    "EvaluationResult",
    "save_model",
    "load_model",
    "SurrogateConfig",
    "Explanation",
    "MoleculeWeighting",
    "sample_perturbations",
    "fit_surrogate",
    "explain",
    "bootstrap_weighting",
    "explanation_payload",
    "AtomScores",
    "Layout",
    "LegendEntry",
    "GridCell",
    "project_weights",
    "score_color",
    "compute_layout",
    "render",
    "render_grid",
    "BinaryMetrics",
    "MetricSummary",
    "SpearmanResult",
    "TTestResult",
    "binary_metrics",
    "per_feature_metrics",
    "summarize_feature_metrics",
    "format_feature_summary",
    "format_mean_std",
    "roc_auc",
    "spearman",
    "two_sample_t",
]

"""Soft Biometric Leakage Score (SBLS).

Measures how much soft-biometric information (sex, age group, ...) a
zero-shot attacker can still recover from anonymized speech, from attacker
score files and ground-truth labels.
"""

__version__ = "0.1.0"

from .attribute import AttributeLeakage, attribute_excess, p_attr  # noqa: E402
from .auc import (  # noqa: E402
    AlignmentResult,
    align_balanced_accuracy,
    align_permutation,
    macro_balanced_accuracy,
    ovr_auc,
)
from .data import (  # noqa: E402
    AttributeSchema,
    EvaluationConfig,
    LabelTable,
    ScoreTable,
    load_schema,
    load_tables,
)
from .linkage import ConfusionMatrix, LinkageResult, hard_predictions, mutual_information, p_assoc  # noqa: E402
from .pipeline import evaluate, evaluate_files  # noqa: E402
from .report import SblsReport, band_vulnerability, compose, emit_report, load_report  # noqa: E402
from .subgroup import SubgroupReport, enumerate_subgroups, p_subgroup, subgroup_leakage  # noqa: E402

__all__ = [
    "AlignmentResult", "AttributeLeakage", "AttributeSchema", "ConfusionMatrix",
    "EvaluationConfig", "LabelTable", "LinkageResult", "SblsReport", "ScoreTable",
    "SubgroupReport", "align_balanced_accuracy", "align_permutation", "attribute_excess",
    "band_vulnerability", "compose", "emit_report", "enumerate_subgroups", "evaluate",
    "evaluate_files", "hard_predictions", "load_report", "load_schema", "load_tables",
    "macro_balanced_accuracy", "mutual_information", "ovr_auc", "p_assoc", "p_attr",
    "p_subgroup", "subgroup_leakage",
]

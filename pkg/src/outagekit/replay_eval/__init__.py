from .corpus import (
    Annotation,
    PLAYBOOKS,
    Trace,
    default_topology,
    generate_corpus,
    load_trace,
    save_trace,
)
from .coverage import coverage_rows, export_coverage, project_2d
from .ground_truth import (
    GroundTruthAction,
    build_ground_truth,
    extract_actions,
    filter_to_playbook_actions,
)
from .matching import MatchResult, candidate_pairs, match_actions
from .metrics import EvalReport, StageMetrics, build_report
from .replay import (
    CorpusEvaluation,
    PredictedAction,
    ReplayOutcome,
    ReplayRunner,
    evaluate_corpus,
)

__all__ = [
    "Annotation",
    "PLAYBOOKS",
    "Trace",
    "default_topology",
    "generate_corpus",
    "load_trace",
    "save_trace",
    "GroundTruthAction",
    "build_ground_truth",
    "extract_actions",
    "filter_to_playbook_actions",
    "MatchResult",
    "candidate_pairs",
    "match_actions",
    "EvalReport",
    "StageMetrics",
    "build_report",
    "CorpusEvaluation",
    "PredictedAction",
    "ReplayOutcome",
    "ReplayRunner",
    "evaluate_corpus",
    "coverage_rows",
    "export_coverage",
    "project_2d",
]

"""Replay evaluation metrics.

Precision is the share of recommendations that matched some ground-truth
action; recall is the share of ground-truth actions that were matched.
Zero denominators yield null rather than a fake 0 or 1. Per-stage rows
attribute precision to the recommendation's stage and recall to the
ground-truth action's stage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..config import PipelineConfig
from ..stages import PHASES
from .matching import MatchResult


def _ratio(num: int, den: int) -> float | None:
    if den == 0:
        return None
    return round(num / den, 6)


@dataclass
class StageMetrics:
    stage: str
    n_recs: int = 0
    n_gts: int = 0
    matched_recs: int = 0
    matched_gts: int = 0

    def to_dict(self):
        return {
            "stage": self.stage,
            "n_recs": self.n_recs,
            "n_gts": self.n_gts,
            "matched_recs": self.matched_recs,
            "matched_gts": self.matched_gts,
            "precision": _ratio(self.matched_recs, self.n_recs),
            "recall": _ratio(self.matched_gts, self.n_gts),
        }


@dataclass
class EvalReport:
    ground_truth_set: str
    n_recs: int
    n_gts: int
    matched: int
    matched_gts: int
    per_stage: list[StageMetrics]
    config: dict
    trace_ids: list[str] = field(default_factory=list)

    @property
    def precision(self) -> float | None:
        return _ratio(self.matched, self.n_recs)

    @property
    def recall(self) -> float | None:
        return _ratio(self.matched_gts, self.n_gts)

    def to_dict(self):
        return {
            "ground_truth_set": self.ground_truth_set,
            "trace_ids": list(self.trace_ids),
            "n_recs": self.n_recs,
            "n_gts": self.n_gts,
            "matched": self.matched,
            "matched_gts": self.matched_gts,
            "precision": self.precision,
            "recall": self.recall,
            "per_stage": [s.to_dict() for s in self.per_stage],
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def check_consistency(self):
        """Micro counts must add up across the stage breakdown."""
        assert sum(s.n_recs for s in self.per_stage) == self.n_recs
        assert sum(s.n_gts for s in self.per_stage) == self.n_gts
        assert sum(s.matched_recs for s in self.per_stage) == self.matched
        assert sum(s.matched_gts for s in self.per_stage) == self.matched_gts
        assert self.matched <= self.n_recs
        assert self.matched_gts <= min(self.matched, self.n_gts)


def build_report(recs, gts, result: MatchResult, cfg: PipelineConfig,
                 ground_truth_set: str = "G1",
                 trace_ids: list[str] | None = None) -> EvalReport:
    stages = {name: StageMetrics(stage=name) for name in PHASES}
    other = StageMetrics(stage="unknown")

    def row(stage: str) -> StageMetrics:
        return stages.get(stage, other)

    for rec in recs:
        row(rec.stage).n_recs += 1
    for gt in gts:
        row(gt.stage).n_gts += 1
    seen_gts = set()
    for i, j, _score in result.pairs:
        row(recs[i].stage).matched_recs += 1
        if j not in seen_gts:
            seen_gts.add(j)
            row(gts[j].stage).matched_gts += 1

    per_stage = [stages[name] for name in PHASES]
    if other.n_recs or other.n_gts:
        per_stage.append(other)
    report = EvalReport(
        ground_truth_set=ground_truth_set,
        n_recs=len(recs),
        n_gts=len(gts),
        matched=len(result.pairs),
        matched_gts=len(seen_gts),
        per_stage=per_stage,
        config=cfg.snapshot(),
        trace_ids=sorted(trace_ids or []),
    )
    report.check_consistency()
    return report

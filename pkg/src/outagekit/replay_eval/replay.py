"""Trace replay harness.

Feeds recorded signals through the live pipeline in virtual time, posts
the curated operator actions back as human feedback (the implicit reward
loop), and closes the incident so it lands in episodic memory. The same
runner can replay many traces in sequence, which is how long-term memory
accumulates across incidents.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..config import PipelineConfig
from ..orchestrator import Orchestrator
from ..perception import Topology
from .corpus import PLAYBOOKS, Trace, default_topology
from .ground_truth import GroundTruthAction, build_ground_truth, \
    filter_to_playbook_actions
from .matching import MatchResult, match_actions
from .metrics import EvalReport, build_report


@dataclass
class PredictedAction:
    rec_id: str
    ts: int
    action_text: str
    stage: str
    confidence: float
    supports: dict
    status: str

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class ReplayOutcome:
    trace_id: str
    recommendations: list[PredictedAction]
    records: list[dict]
    case_id: str | None
    n_observations: int
    n_events: int

    def to_dict(self):
        return {
            "trace_id": self.trace_id,
            "recommendations": [r.to_dict() for r in self.recommendations],
            "records": self.records,
            "case_id": self.case_id,
            "n_observations": self.n_observations,
            "n_events": self.n_events,
        }


class ReplayRunner:
    """One orchestrator instance reused across traces so knowledge carries
    over from incident to incident."""

    def __init__(self, config: PipelineConfig | None = None,
                 topology: Topology | None = None,
                 data_dir: str | None = None,
                 load_playbooks: bool = True):
        self.config = config or PipelineConfig()
        self.orchestrator = Orchestrator(
            topology or default_topology(), config=self.config,
            data_dir=data_dir,
        )
        if load_playbooks and not any(
            e.provenance == "playbook"
            for e in self.orchestrator.kca_store.entries(include_inactive=True)
        ):
            for doc_id, doc in sorted(PLAYBOOKS.items()):
                self.orchestrator.add_playbook(
                    doc_id, doc["body"], title=doc["title"],
                    service=doc["service"],
                )

    @property
    def gateway(self):
        return self.orchestrator.gateway

    def replay(self, trace: Trace, stop_after: int | None = None) -> ReplayOutcome:
        """Replay one trace. With stop_after set, ingestion halts after that
        many inputs and the incident is left open (crash-recovery tests)."""
        orch = self.orchestrator
        incident_id = trace.trace_id
        start_ts = trace.signals[0].ts if trace.signals else 0
        orch.create_incident(incident_id, trace.incident_meta.get("title", ""),
                             ts=start_ts)

        # interleave signals and feedback in virtual-time order; at equal
        # timestamps the signal lands first, matching how an operator note
        # reaches the transcript before it is filed as feedback
        inputs: list[tuple[int, int, object]] = []
        inputs.extend((sig.ts, 0, sig) for sig in trace.signals)
        inputs.extend((ann.ts, 1, ann) for ann in trace.annotations)
        inputs.sort(key=lambda item: (item[0], item[1],
                                      getattr(item[2], "payload", "")
                                      or getattr(item[2], "action_text", "")))

        fed = 0
        for _ts, kind, item in inputs:
            if stop_after is not None and fed >= stop_after:
                break
            if kind == 0:
                orch.ingest_signal(incident_id, item)
            else:
                orch.post_feedback(incident_id, {
                    "ts": item.ts,
                    "human_action_text": item.action_text,
                    "result": item.result,
                })
            fed += 1

        case_id = None
        if stop_after is None:
            end_ts = max((ts for ts, _, _ in inputs), default=start_ts)
            case_id = orch.close_incident(incident_id, ts=end_ts)["case_id"]
        return self._outcome(trace, case_id)

    def _outcome(self, trace: Trace, case_id: str | None) -> ReplayOutcome:
        orch = self.orchestrator
        records = [r.to_dict() for r in orch.stream(trace.trace_id)]
        recs = [
            PredictedAction(
                rec_id=r["body"]["rec_id"],
                ts=r["body"]["ts"],
                action_text=r["body"]["action_text"],
                stage=r["body"]["stage"],
                confidence=r["body"]["confidence"],
                supports=r["body"]["supports"],
                status=r["body"]["status"],
            )
            for r in records
            if r["kind"] == "recommendation" and not r["body"]["abstained"]
        ]
        n_obs = len(orch.perceptor.observations.get(trace.trace_id, {}))
        n_events = sum(1 for r in records if r["kind"] == "critical_event")
        return ReplayOutcome(
            trace_id=trace.trace_id,
            recommendations=recs,
            records=records,
            case_id=case_id,
            n_observations=n_obs,
            n_events=n_events,
        )


@dataclass
class CorpusEvaluation:
    report_g1: EvalReport
    report_g2: EvalReport
    outcomes: list[ReplayOutcome]
    ground_truth: dict[str, list[GroundTruthAction]]
    ground_truth_g2: dict[str, list[GroundTruthAction]]
    matches: dict[str, MatchResult] = field(default_factory=dict)


def evaluate_corpus(traces: list[Trace], config: PipelineConfig | None = None,
                    data_dir: str | None = None,
                    label_files: dict[str, str] | None = None) -> CorpusEvaluation:
    """Replay every trace on a shared runner and score recommendations
    against G1 (all operator actions) and G2 (playbook-backed subset)."""
    config = config or PipelineConfig()
    runner = ReplayRunner(config=config, data_dir=data_dir)
    gateway = runner.gateway

    outcomes = []
    all_recs, all_g1, all_g2 = [], [], []
    gt_map, gt2_map, match_map = {}, {}, {}
    pairs_g1, pairs_g2 = [], []
    for trace in sorted(traces, key=lambda t: t.trace_id):
        outcome = runner.replay(trace)
        outcomes.append(outcome)
        label_file = (label_files or {}).get(trace.trace_id)
        g1 = build_ground_truth(trace, gateway, label_file=label_file)
        g2 = filter_to_playbook_actions(
            g1, runner.orchestrator.kca_store, gateway,
            threshold=config.g2_threshold,
        )
        gt_map[trace.trace_id] = g1
        gt2_map[trace.trace_id] = g2

        m1 = match_actions(outcome.recommendations, g1, gateway, config)
        m2 = match_actions(outcome.recommendations, g2, gateway, config)
        match_map[trace.trace_id] = m1
        r_off, g1_off, g2_off = len(all_recs), len(all_g1), len(all_g2)
        pairs_g1.extend((i + r_off, j + g1_off, s) for i, j, s in m1.pairs)
        pairs_g2.extend((i + r_off, j + g2_off, s) for i, j, s in m2.pairs)
        all_recs.extend(outcome.recommendations)
        all_g1.extend(g1)
        all_g2.extend(g2)

    trace_ids = [t.trace_id for t in traces]
    result_g1 = _combined(pairs_g1, len(all_recs), len(all_g1))
    result_g2 = _combined(pairs_g2, len(all_recs), len(all_g2))
    return CorpusEvaluation(
        report_g1=build_report(all_recs, all_g1, result_g1, config,
                               ground_truth_set="G1", trace_ids=trace_ids),
        report_g2=build_report(all_recs, all_g2, result_g2, config,
                               ground_truth_set="G2", trace_ids=trace_ids),
        outcomes=outcomes,
        ground_truth=gt_map,
        ground_truth_g2=gt2_map,
        matches=match_map,
    )


def _combined(pairs, n_recs, n_gts) -> MatchResult:
    matched_r = {i for i, _, _ in pairs}
    matched_g = {j for _, j, _ in pairs}
    return MatchResult(
        pairs=sorted(pairs),
        unmatched_recs=[i for i in range(n_recs) if i not in matched_r],
        unmatched_gts=[j for j in range(n_gts) if j not in matched_g],
    )

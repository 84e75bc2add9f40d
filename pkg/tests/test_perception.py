import pytest

from outagekit.config import PipelineConfig
from outagekit.errors import MalformedSignal, TemporalViolation, UnknownModality
from outagekit.perception import Duplicate, Perceptor, RawSignal
from outagekit.perception.rules import (
    canonical_severity,
    classify_event_type,
    worse_severity,
)
from outagekit.stages import max_phase, tag_phase

MIN = 60_000
BASE = 1_748_750_400_000  # an arbitrary epoch-ms anchor


def sig(ts_min, payload, modality="communication", source="chat", attrs=None,
        incident_id="inc-1"):
    return RawSignal(incident_id=incident_id, ts=BASE + ts_min * MIN,
                     modality=modality, source=source, payload=payload,
                     attrs=attrs or {})


@pytest.fixture()
def perceptor(gateway, topology, config):
    return Perceptor(gateway, topology, config)


# ---------------------------------------------------------------------------
# rules

@pytest.mark.parametrize("raw,expected", [
    ("SEV-1", "SEV1"), ("sev 1", "SEV1"), ("s1", "SEV1"), ("1", "SEV1"),
    ("SEV2", "SEV2"), ("Sev-3", "SEV3"), ("sev4", "SEV4"),
    ("", None), ("critical-ish", None),
])
def test_canonical_severity(raw, expected):
    assert canonical_severity(raw) == expected


def test_worse_severity_orders_sev1_highest():
    assert worse_severity("SEV3", "SEV1") == "SEV1"
    assert worse_severity("unknown", "SEV4") == "SEV4"
    assert worse_severity("SEV2", "SEV2") == "SEV2"


@pytest.mark.parametrize("payload,expected", [
    ("mitigation applied, error rate dropping", "mitigation_progress"),
    ("Root cause identified and confirmed: bad config", "root_cause_identified"),
    ("hypothesis: cooling failure suspected", "hypothesis"),
    ("Mitigation started: failover initiated", "mitigation_start"),
    ("service restored, temperatures stabilizing", "recovery"),
    ("primary db not responding to health checks", "fault_detected"),
    ("joining the call now", "status_update"),
])
def test_event_type_rules(payload, expected):
    assert classify_event_type(payload) == expected


def test_tag_phase_prefers_most_advanced_stage():
    assert tag_phase("alert triggered while mitigation rollback runs") == "Mitigate"
    assert tag_phase("impact assessed, service restored") == "Resolve"
    assert tag_phase("nothing stagelike here") is None


def test_max_phase():
    assert max_phase("Detect", "Mitigate") == "Mitigate"
    assert max_phase("Resolve", "Assess") == "Resolve"


# ---------------------------------------------------------------------------
# normalize / enrich / classify

def test_normalize_rejects_unknown_modality(perceptor):
    with pytest.raises(UnknownModality):
        perceptor.normalize(sig(0, "x", modality="video"))


def test_normalize_rejects_far_future_timestamps(perceptor, config):
    now = BASE
    late = sig(0, "x")
    late.ts = now + (config.clock_skew_s + 10) * 1000
    with pytest.raises(TemporalViolation):
        perceptor.normalize(late, now_ms=now)


def test_source_allowlist(gateway, topology):
    cfg = PipelineConfig(source_allowlist=["chat"])
    perceptor = Perceptor(gateway, topology, cfg)
    assert perceptor.normalize(sig(0, "hello"), now_ms=BASE) is not None
    with pytest.raises(MalformedSignal):
        perceptor.normalize(sig(0, "hello", source="pager"), now_ms=BASE)


def test_duplicate_same_payload_same_minute(perceptor):
    first = perceptor.normalize(sig(0, "db is down"), now_ms=BASE)
    again = sig(0, "DB   is down")  # case/whitespace variant
    again.ts += 20_000
    dup = perceptor.normalize(again, now_ms=again.ts)
    assert first is not None and not isinstance(first, Duplicate)
    assert isinstance(dup, Duplicate)
    assert dup.dedup_key == first.dedup_key


def test_same_payload_next_minute_is_new(perceptor):
    perceptor.normalize(sig(0, "db is down"), now_ms=BASE)
    later = perceptor.normalize(sig(1, "db is down"), now_ms=BASE + MIN)
    assert not isinstance(later, Duplicate)


def test_enrich_resolves_aliases_and_dependencies(perceptor):
    obs = perceptor.normalize(
        sig(0, "dd-cluster offline, storage layer overheating"), now_ms=BASE)
    obs = perceptor.enrich(obs)
    names = {e.canonical_name for e in obs.entities}
    assert {"DirectDrive", "StorageLayer"} <= names
    # 1-hop neighbors from the topology
    assert "CoolingSystem" in obs.dependency_context


def test_enrich_flags_unresolved_attr_entities(perceptor):
    obs = perceptor.normalize(
        sig(0, "weird", attrs={"service": "MysteryService"}), now_ms=BASE)
    obs = perceptor.enrich(obs)
    mystery = [e for e in obs.entities if e.canonical_name == "MysteryService"]
    assert mystery and mystery[0].unresolved


def test_classify_attr_severity_beats_keywords(perceptor):
    obs = perceptor.normalize(
        sig(0, "minor sev3 blip", attrs={"severity": "SEV-1"}), now_ms=BASE)
    obs = perceptor.enrich(obs)
    obs = perceptor.classify(obs, "Detect")
    assert obs.tags.severity == "SEV1"


def test_classify_keyword_severity(perceptor):
    obs = perceptor.normalize(sig(0, "paging on SEV-2 alert"), now_ms=BASE)
    obs = perceptor.enrich(obs)
    obs = perceptor.classify(obs, "Detect")
    assert obs.tags.severity == "SEV2"


def test_classify_relevance_from_context(perceptor):
    obs = perceptor.normalize(sig(0, "cooling system temperatures rising"),
                              now_ms=BASE)
    obs = perceptor.enrich(obs)
    obs = perceptor.classify(obs, "Detect",
                             context_summary="cooling system overheating")
    far = perceptor.normalize(sig(1, "lunch menu posted"), now_ms=BASE + MIN)
    far = perceptor.enrich(far)
    far = perceptor.classify(far, "Detect",
                             context_summary="cooling system overheating")
    assert obs.tags.relevance > far.tags.relevance


# ---------------------------------------------------------------------------
# aggregation and deltas

def _observe(perceptor, raw, phase="Detect", now=None, summary=None, attrs=None):
    if attrs:
        raw.attrs.update(attrs)
    obs = perceptor.normalize(raw, now_ms=now or raw.ts)
    obs = perceptor.enrich(obs)
    return perceptor.classify(obs, phase, context_summary=summary)


def test_aggregate_carries_state_forward_on_empty_window(perceptor):
    obs = _observe(perceptor, sig(0, "SEV-2 alert on order db"))
    s0 = perceptor.aggregate("inc-1", 0, [obs], None, BASE)
    s1 = perceptor.aggregate("inc-1", 1, [], s0, BASE + 5 * MIN)
    assert s1.window_index == 1
    assert s1.phase == s0.phase
    assert s1.severity == s0.severity
    assert s1.summary == s0.summary


def test_aggregate_severity_is_sticky_max(perceptor):
    a = _observe(perceptor, sig(0, "SEV-1 alert"))
    s0 = perceptor.aggregate("inc-1", 0, [a], None, BASE)
    b = _observe(perceptor, sig(6, "now just a sev3 leftover"), phase=s0.phase)
    s1 = perceptor.aggregate("inc-1", 1, [b], s0, BASE + 5 * MIN)
    assert s0.severity == "SEV1"
    assert s1.severity == "SEV1"


def test_aggregate_phase_never_regresses_without_explicit_attr(perceptor):
    a = _observe(perceptor, sig(0, "mitigation rollback started"))
    s0 = perceptor.aggregate("inc-1", 0, [a], None, BASE)
    assert s0.phase == "Mitigate"
    b = _observe(perceptor, sig(6, "still assessing impact"), phase=s0.phase)
    s1 = perceptor.aggregate("inc-1", 1, [b], s0, BASE + 5 * MIN)
    assert s1.phase == "Mitigate"


def test_aggregate_explicit_attr_phase_can_regress(perceptor):
    a = _observe(perceptor, sig(0, "mitigation rollback started"))
    s0 = perceptor.aggregate("inc-1", 0, [a], None, BASE)
    b = _observe(perceptor, sig(6, "reopening triage",
                                attrs={"phase": "Investigate"}), phase=s0.phase)
    s1 = perceptor.aggregate("inc-1", 1, [b], s0, BASE + 5 * MIN)
    assert s1.phase == "Investigate"


def test_delta_weights_and_promotion(perceptor, config):
    # oracle: recompute expected significance from the configured weights
    a = _observe(perceptor, sig(0, "SEV-2 alert: dd-cluster degraded"))
    s0 = perceptor.aggregate("inc-1", 0, [a], None, BASE)
    b = _observe(perceptor, sig(6, "cooling system impact assessed, "
                                   "customers affected"), phase=s0.phase)
    s1 = perceptor.aggregate("inc-1", 1, [b], s0, BASE + 5 * MIN)
    delta = perceptor.compute_delta(s0, s1)
    w = config.delta_weights
    added = len(s1.affected_entities - s0.affected_entities)
    expected = w["phase"] + min(added * w["affected_entities_per_added"],
                                w["affected_entities_cap"])
    assert delta.significance == pytest.approx(expected)
    events = perceptor.promote(delta, s1)
    kinds = {e.kind for e in events}
    assert "phase_transition" in kinds
    assert "scope_expansion" in kinds


def test_no_change_window_promotes_nothing(perceptor, config):
    a = _observe(perceptor, sig(0, "SEV-2 alert: dd-cluster degraded"))
    s0 = perceptor.aggregate("inc-1", 0, [a], None, BASE)
    b = _observe(perceptor, sig(6, "no update, same picture"), phase=s0.phase)
    s1 = perceptor.aggregate("inc-1", 1, [b], s0, BASE + 5 * MIN)
    delta = perceptor.compute_delta(s0, s1)
    assert delta.significance < config.promote_threshold
    assert perceptor.promote(delta, s1) == []


def test_mitigation_lifecycle_events(perceptor):
    a = _observe(perceptor, sig(0, "Mitigation started: cooling restart initiated"))
    s0 = perceptor.aggregate("inc-1", 0, [a], None, BASE)
    assert s0.mitigations_in_flight
    b = _observe(perceptor, sig(6, "cooling restart complete, temperatures "
                                   "stabilizing"), phase=s0.phase)
    s1 = perceptor.aggregate("inc-1", 1, [b], s0, BASE + 5 * MIN)
    assert s1.mitigations_in_flight == []
    delta = perceptor.compute_delta(s0, s1)
    events = perceptor.promote(delta, s1)
    assert "mitigation_complete" in {e.kind for e in events}


def test_hypothesis_confirmation_event(perceptor):
    a = _observe(perceptor, sig(0, "hypothesis: bad config change suspected"))
    s0 = perceptor.aggregate("inc-1", 0, [a], None, BASE)
    assert s0.open_hypotheses
    b = _observe(perceptor, sig(6, "root cause identified and confirmed: "
                                   "bad config change"), phase=s0.phase,
                 attrs={"severity": "SEV-2"})
    s1 = perceptor.aggregate("inc-1", 1, [b], s0, BASE + 5 * MIN)
    assert any(h.startswith("confirmed:") for h in s1.open_hypotheses)
    delta = perceptor.compute_delta(s0, s1)
    # hypothesis confirmation alone (0.2) stays below the 0.3 threshold;
    # combined with the severity change the window promotes
    events = perceptor.promote(delta, s1)
    kinds = {e.kind for e in events}
    assert "root_cause_identified" in kinds
    assert "severity_change" in kinds


def test_events_carry_evidence_refs(perceptor):
    a = _observe(perceptor, sig(0, "SEV-1 alert: dd-cluster thermal shutdown"))
    s0 = perceptor.aggregate("inc-1", 0, [a], None, BASE)
    from outagekit.perception import ContextState
    baseline = ContextState(incident_id="inc-1", window_index=-1,
                            window_start=BASE, window_end=BASE)
    delta = perceptor.compute_delta(baseline, s0)
    events = perceptor.promote(delta, s0)
    assert events
    for event in events:
        assert event.evidence
        assert all(ref in s0.observation_refs for ref in event.evidence)

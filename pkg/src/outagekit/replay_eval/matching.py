"""Matching recommendations against ground-truth actions.

A recommendation counts as a hit when a ground-truth action with high
enough semantic similarity occurs in a subsequent time window, i.e. the
system suggested the action before (or as) the operators performed it.
Matching is one-to-one by default: greedy over descending similarity,
ties broken by recommendation timestamp then ground-truth timestamp so
the result never depends on input order. An exhaustive assignment mode
exists for auditing the greedy heuristic on small inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..config import PipelineConfig
from ..gateway import Gateway


@dataclass
class MatchResult:
    pairs: list[tuple[int, int, float]]  # (rec index, gt index, similarity)
    unmatched_recs: list[int]
    unmatched_gts: list[int]

    def to_dict(self):
        return {
            "pairs": [list(p) for p in self.pairs],
            "unmatched_recs": list(self.unmatched_recs),
            "unmatched_gts": list(self.unmatched_gts),
        }


def _in_window(rec_ts: int, gt_ts: int, window_ms: int, symmetric: bool) -> bool:
    delta = gt_ts - rec_ts
    if symmetric:
        return abs(delta) <= window_ms
    return 0 <= delta <= window_ms


def candidate_pairs(recs, gts, gateway: Gateway, cfg: PipelineConfig):
    """All (rec, gt, similarity) pairs that clear both the time-window and
    the similarity gates. recs/gts expose .ts and the action text."""
    window_ms = cfg.eval_window_s * 1000
    rec_embs = [gateway.embed_one(r.action_text) for r in recs]
    gt_embs = [gateway.embed_one(g.action_text) for g in gts]
    pairs = []
    for i, rec in enumerate(recs):
        for j, gt in enumerate(gts):
            if not _in_window(rec.ts, gt.ts, window_ms, cfg.eval_symmetric_window):
                continue
            score = rec_embs[i].cosine(gt_embs[j])
            if score >= cfg.eval_threshold:
                pairs.append((i, j, round(float(score), 6)))
    return pairs


def _greedy(pairs, recs, gts):
    ordered = sorted(pairs, key=lambda p: (-p[2], recs[p[0]].ts, gts[p[1]].ts,
                                           p[0], p[1]))
    used_r, used_g, chosen = set(), set(), []
    for i, j, score in ordered:
        if i in used_r or j in used_g:
            continue
        used_r.add(i)
        used_g.add(j)
        chosen.append((i, j, score))
    return chosen


def _exhaustive(pairs, recs, gts):
    """Optimal one-to-one assignment by total similarity (cardinality first).
    Exponential; intended for cross-checking greedy on small cases."""
    by_rec: dict[int, list] = {}
    for i, j, s in pairs:
        by_rec.setdefault(i, []).append((j, s))
    rec_ids = sorted(by_rec)
    best = (0, 0.0, [])
    for r in range(len(rec_ids), 0, -1):
        for subset in itertools.combinations(rec_ids, r):
            for choice in itertools.product(*(by_rec[i] for i in subset)):
                gts_used = [j for j, _ in choice]
                if len(set(gts_used)) != len(gts_used):
                    continue
                total = sum(s for _, s in choice)
                if (r, total) > (best[0], best[1]):
                    best = (r, total,
                            [(i, j, s) for i, (j, s) in zip(subset, choice)])
        if best[0] == r:
            break
    return best[2]


def match_actions(recs, gts, gateway: Gateway, cfg: PipelineConfig) -> MatchResult:
    pairs = candidate_pairs(recs, gts, gateway, cfg)
    if not cfg.eval_one_to_one:
        # many-to-one diagnostic mode: every rec keeps its best gt
        chosen = []
        for i in range(len(recs)):
            mine = [p for p in pairs if p[0] == i]
            if mine:
                chosen.append(max(mine, key=lambda p: (p[2], -gts[p[1]].ts)))
    elif cfg.eval_exact_assignment:
        chosen = _exhaustive(pairs, recs, gts)
    else:
        chosen = _greedy(pairs, recs, gts)
    chosen = sorted(chosen)
    matched_r = {i for i, _, _ in chosen}
    matched_g = {j for _, j, _ in chosen}
    return MatchResult(
        pairs=chosen,
        unmatched_recs=[i for i in range(len(recs)) if i not in matched_r],
        unmatched_gts=[j for j in range(len(gts)) if j not in matched_g],
    )

"""Action-space coverage export.

Flattens predicted actions, ground-truth actions, and playbook action
templates into one embedding table with a shared 2-D projection, so a
scatter plot shows which parts of the action space the recommender
actually reaches. The projection is a plain PCA (top two right singular
vectors of the centered matrix), which keeps the export deterministic.
"""

from __future__ import annotations

import json

import numpy as np

from ..gateway import Gateway
from ..memory import KcaStore


def _sign_fix(components: np.ndarray) -> np.ndarray:
    # SVD is sign-ambiguous; pin each axis so its largest-magnitude
    # coefficient is positive and repeated runs agree byte for byte
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0:
            row *= -1.0
    return components


def project_2d(matrix: np.ndarray) -> np.ndarray:
    if len(matrix) == 0:
        return np.zeros((0, 2))
    centered = matrix - matrix.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    components = _sign_fix(vt[:2].copy())
    if components.shape[0] < 2:
        components = np.vstack([components,
                                np.zeros((2 - components.shape[0],
                                          matrix.shape[1]))])
    return centered @ components.T


def coverage_rows(predicted, ground_truth, kca_store: KcaStore,
                  gateway: Gateway) -> list[dict]:
    """Rows: {kind, stage, text, embedding, x, y}. kinds are `predicted`,
    `ground_truth` and `playbook`."""
    items = []
    for rec in predicted:
        items.append(("predicted", rec.stage, rec.action_text))
    for gt in ground_truth:
        items.append(("ground_truth", gt.stage, gt.action_text))
    for entry in kca_store.entries(include_inactive=False):
        if entry.provenance == "playbook":
            items.append(("playbook", entry.key.stage, entry.action_template))

    embs = [gateway.embed_one(text) for _, _, text in items]
    matrix = np.array([e.values for e in embs], dtype=np.float64)
    xy = project_2d(matrix)
    rows = []
    for (kind, stage, text), emb, point in zip(items, embs, xy):
        rows.append({
            "kind": kind,
            "stage": stage,
            "text": text,
            "embedding": [round(float(v), 6) for v in emb.values],
            "x": round(float(point[0]), 6),
            "y": round(float(point[1]), 6),
        })
    return rows


def export_coverage(predicted, ground_truth, kca_store: KcaStore,
                    gateway: Gateway, path: str) -> int:
    rows = coverage_rows(predicted, ground_truth, kca_store, gateway)
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return len(rows)

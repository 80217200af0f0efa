"""HTTP client for an external semantic scoring endpoint.

One POST per scoring round: {prompt, candidates:[{id,label,category,
attributes,relations}]} -> {scores:[{id,score}], ranking:[label]}. No retries
within a round; every failure maps to BackendUnavailable so the caller keeps
its previous prior.
"""

from __future__ import annotations

from dataclasses import dataclass

import requests

from .errors import ExternalTimeout, MalformedResponse, TransportError
from .perception import TrackMemory
from .semantics import PromptQuery, SemanticParams


@dataclass(frozen=True)
class ExternalEndpoint:
    url: str
    deadline_s: float = 2.0


def external_score(prompt_text: str, candidates: list[dict], endpoint: ExternalEndpoint):
    """Issue one scoring request; returns (scores_by_id, ranked_labels)."""
    body = {"prompt": prompt_text, "candidates": candidates}
    try:
        resp = requests.post(endpoint.url, json=body, timeout=endpoint.deadline_s)
    except requests.Timeout as e:
        raise ExternalTimeout(f"scorer missed {endpoint.deadline_s}s deadline") from e
    except requests.RequestException as e:
        raise TransportError(f"scorer unreachable: {e}") from e
    try:
        payload = resp.json()
        scores = {str(entry["id"]): float(entry["score"]) for entry in payload["scores"]}
        ranking = [str(label) for label in payload["ranking"]]
    except (ValueError, KeyError, TypeError) as e:
        raise MalformedResponse(f"scorer response did not match protocol: {e}") from e
    scores = {k: min(max(v, 0.0), 1.0) for k, v in scores.items()}
    return scores, ranking


class ExternalBackend:
    """Adapter giving the external endpoint the same shape as the mock backend."""

    def __init__(self, endpoint: ExternalEndpoint, params: SemanticParams):
        self.endpoint = endpoint
        self.params = params
        self.calls = 0

    def score(self, query: PromptQuery, prompt_text: str, memory: TrackMemory):
        self.calls += 1
        ids = memory.ids()
        candidates = []
        for tid in ids:
            d = memory.tracks[tid].descriptor
            candidates.append(
                {
                    "id": tid,
                    "label": d.label,
                    "category": d.category,
                    "attributes": dict(d.attributes),
                    "relations": [{"predicate": r.predicate, "target": r.target} for r in d.relations],
                }
            )
        scores, ranking = external_score(prompt_text, candidates, self.endpoint)
        floor = self.params.score_floor
        vlm = {tid: scores.get(tid, floor) for tid in ids}
        rank_score = {label: 1.0 / (i + 1) for i, label in enumerate(ranking)}
        llm = {tid: rank_score.get(memory.tracks[tid].descriptor.label, floor) for tid in ids}
        return vlm, llm

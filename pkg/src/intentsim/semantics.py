"""Prompt-conditioned semantic prior over tracked objects and areas.

A mission prompt is parsed by a closed rule grammar, every track descriptor
is scored for relevance (deterministic mock of a vision-language scorer), the
track labels are rank-scored (mock of a text-only ranker), and the two score
maps are fused by a power-weighted product, normalized, and pruned. The
result is an explicit probability factor the belief engine multiplies in.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field, replace

from .errors import BackendUnavailable, EmptyCandidateSet, UnparsablePrompt
from .ontology import Ontology
from .perception import ObjectDescriptor, TrackMemory
from .world import Scenario, area_of, distance

COLOR_WORDS = frozenset(
    {"red", "blue", "green", "yellow", "black", "white", "orange", "purple", "pink", "brown", "gray", "grey"}
)
SIZE_WORDS = frozenset({"small", "little", "tiny", "big", "large"})
_ARTICLES = frozenset({"the", "a", "an", "my", "that", "this", "some"})


@dataclass(frozen=True)
class PromptQuery:
    raw_text: str
    kind: str  # "specific" | "categorical" | "relational"
    noun: str | None = None
    category: str | None = None
    attribute_constraints: dict[str, str] = field(default_factory=dict)
    relation_constraints: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class SemanticPrior:
    """Normalized relevance weights; object weights sum to 1 over unpruned tracks."""

    object_weights: dict[str, float] = field(default_factory=dict)
    area_weights: dict[str, float] = field(default_factory=dict)
    pruned: frozenset[str] = frozenset()
    prompt_version: int = 0
    floor: float = 1e-3  # raw-score floor used when this prior was built


@dataclass(frozen=True)
class SemanticParams:
    vlm_exponent: float = 1.0  # alpha
    llm_exponent: float = 0.5  # beta
    score_floor: float = 1e-3  # epsilon_s
    prune_ratio: float = 0.02  # rho, relative to the max weight
    near_radius: float = 0.75  # meters


# ---------------------------------------------------------------------------
# prompt parsing


def _tokenize(text: str) -> list[str]:
    cleaned = text.lower().translate(str.maketrans("", "", string.punctuation))
    return cleaned.split()


def parse_prompt(text: str, ontology: Ontology) -> PromptQuery:
    """Rule-based extraction of the query structure from a mission prompt.

    Relation phrases ("next to X", "near X", "on X") are consumed first so
    their reference nouns do not shadow the query noun; of the remaining
    tokens, the last ontology noun becomes the noun, known color/size
    adjectives become attribute constraints, and a category word with no
    specific noun yields a categorical query.
    """
    if not text or not text.strip():
        raise UnparsablePrompt("empty prompt")
    tokens = _tokenize(text)
    consumed = [False] * len(tokens)
    relations: list[tuple[str, str]] = []

    i = 0
    while i < len(tokens):
        predicate = None
        skip = 0
        if tokens[i] == "next" and i + 1 < len(tokens) and tokens[i + 1] == "to":
            predicate, skip = "near", 2
        elif tokens[i] in ("near", "beside"):
            predicate, skip = "near", 1
        elif tokens[i] == "on":
            predicate, skip = "on", 1
        if predicate is None:
            i += 1
            continue
        j = i + skip
        while j < len(tokens) and tokens[j] in _ARTICLES:
            j += 1
        start = j
        while j < len(tokens) and tokens[j] not in ("next", "near", "beside", "on"):
            j += 1
        target = " ".join(tokens[start:j])
        if target:
            relations.append((predicate, target))
            for k in range(i, j):
                consumed[k] = True
        i = j if j > i else i + 1

    noun = None
    category = None
    attributes: dict[str, str] = {}
    for idx, tok in enumerate(tokens):
        if consumed[idx]:
            continue
        if ontology.canonical(tok) is not None:
            noun = tok
        elif tok in ontology.categories:
            category = tok
        elif tok in COLOR_WORDS:
            attributes["color"] = tok
        elif tok in SIZE_WORDS:
            attributes["size"] = tok

    if relations:
        kind = "relational"
    elif noun is not None:
        kind = "specific"
    elif category is not None:
        kind = "categorical"
    else:
        raise UnparsablePrompt(f"no ontology noun or category word in {text!r}")
    return PromptQuery(
        raw_text=text,
        kind=kind,
        noun=noun,
        category=category,
        attribute_constraints=attributes,
        relation_constraints=tuple(relations),
    )


# ---------------------------------------------------------------------------
# mock scorers

_BASE_EXACT = 1.0
_BASE_SYNONYM = 0.9
_BASE_CATEGORY = 0.8
_BASE_SIBLING = 0.3
_BASE_UNRELATED = 0.05
_ATTR_VIOLATED = 0.2
_ATTR_ABSENT = 0.6
_REL_UNRESOLVED = 0.4
_REL_VIOLATED = 0.1
SCORE_CLAMP = (0.01, 1.0)


def _sibling_categories(a: str, b: str, ontology: Ontology) -> bool:
    pa, pb = ontology.parent(a), ontology.parent(b)
    return pa is not None and pa == pb


def _base_score(query: PromptQuery, descriptor: ObjectDescriptor, ontology: Ontology) -> float:
    if query.noun is not None:
        if descriptor.label == query.noun:
            return _BASE_EXACT
        if ontology.synonymous(descriptor.label, query.noun):
            return _BASE_SYNONYM
        canon = ontology.canonical(query.noun)
        effective = query.category or (ontology.parent(canon) if canon else None)
        if effective is None:
            return _BASE_UNRELATED
        if ontology.is_or_descends(descriptor.category, effective) or ontology.is_or_descends(
            descriptor.label, effective
        ):
            return _BASE_CATEGORY
        if _sibling_categories(descriptor.category, effective, ontology):
            return _BASE_SIBLING
        return _BASE_UNRELATED
    if query.category is not None:
        if ontology.is_or_descends(descriptor.category, query.category) or ontology.is_or_descends(
            descriptor.label, query.category
        ):
            return _BASE_CATEGORY
        if _sibling_categories(descriptor.category, query.category, ontology):
            return _BASE_SIBLING
        return _BASE_UNRELATED
    # purely relational prompt: no noun filter, relations decide
    return _BASE_EXACT


def _match_areas(target: str, areas) -> list:
    norm = target.replace("_", " ").strip()
    return [a for a in areas if a.id.replace("_", " ") == norm or a.name.lower() == norm]


def _relation_factor(
    predicate: str,
    target: str,
    descriptor: ObjectDescriptor,
    tracks: dict,
    ontology: Ontology,
    areas,
    candidate_id: str | None,
    near_radius: float,
) -> float:
    target_canon = ontology.canonical(target)
    matched_areas = _match_areas(target, areas)
    ref_tracks = []
    if target_canon is not None:
        for tid in sorted(tracks):
            if tid == candidate_id:
                continue
            if ontology.canonical(tracks[tid].descriptor.label) == target_canon:
                ref_tracks.append(tracks[tid])

    if predicate == "near":
        points = [t.position_estimate for t in ref_tracks] + [a.centroid for a in matched_areas]
        if not points:
            return _REL_UNRESOLVED
        candidate = tracks.get(candidate_id) if candidate_id is not None else None
        if candidate is None:
            return _REL_UNRESOLVED  # bare descriptor: geometry unknown
        dmin = min(distance(candidate.position_estimate, p) for p in points)
        return 1.0 if dmin <= near_radius else _REL_VIOLATED

    # "on" holds iff the world declares it on a matching target
    target_ids = {a.id for a in matched_areas}
    if target_canon is not None:
        for tid in sorted(tracks):
            if ontology.canonical(tracks[tid].descriptor.label) == target_canon:
                target_ids.add(tid)
    if not target_ids:
        return _REL_UNRESOLVED
    declared = {r.target for r in descriptor.relations if r.predicate == "on"}
    return 1.0 if declared & target_ids else _REL_VIOLATED


def mock_vlm_score(
    query: PromptQuery,
    descriptor: ObjectDescriptor,
    tracks: dict,
    ontology: Ontology,
    *,
    areas=(),
    candidate_id: str | None = None,
    near_radius: float = 0.75,
) -> float:
    """Deterministic relevance of one descriptor to the query, in [0.01, 1]."""
    score = _base_score(query, descriptor, ontology)
    for attr, value in sorted(query.attribute_constraints.items()):
        have = descriptor.attributes.get(attr)
        if have is None:
            score *= _ATTR_ABSENT
        elif have == value:
            pass
        else:
            score *= _ATTR_VIOLATED
    for predicate, target in query.relation_constraints:
        score *= _relation_factor(
            predicate, target, descriptor, tracks, ontology, areas, candidate_id, near_radius
        )
    return min(max(score, SCORE_CLAMP[0]), SCORE_CLAMP[1])


def mock_llm_rank(query: PromptQuery, labels: list[str], ontology: Ontology) -> dict[str, float]:
    """Reciprocal-rank scores over unique labels; ties break lexicographically."""
    if not labels:
        raise EmptyCandidateSet("no labels to rank")
    uniq = sorted(set(labels))
    scored = []
    for label in uniq:
        canon = ontology.canonical(label) or label
        bare = ObjectDescriptor(label=label, category=ontology.parent(canon) or "", attributes={}, relations=())
        scored.append((label, mock_vlm_score(query, bare, {}, ontology)))
    scored.sort(key=lambda kv: (-kv[1], kv[0]))
    return {label: 1.0 / (rank + 1) for rank, (label, _) in enumerate(scored)}


# ---------------------------------------------------------------------------
# fusion and pruning


def combine(
    vlm: dict[str, float],
    llm: dict[str, float],
    vlm_exponent: float,
    llm_exponent: float,
    score_floor: float,
    *,
    track_areas: dict[str, str | None] | None = None,
    area_ids=(),
    prompt_version: int = 0,
) -> SemanticPrior:
    """Fuse per-track scores into a normalized prior: raw = max(v^a * l^b, floor)."""
    if not vlm:
        raise EmptyCandidateSet("no tracked candidates to combine")
    if set(vlm) != set(llm):
        raise ValueError("vlm and llm score maps must share the same track ids")
    if vlm_exponent < 0 or llm_exponent < 0 or score_floor <= 0:
        raise ValueError("exponents must be >= 0 and score_floor > 0")
    raw = {j: max(vlm[j] ** vlm_exponent * llm[j] ** llm_exponent, score_floor) for j in sorted(vlm)}
    total = sum(raw.values())
    weights = {j: raw[j] / total for j in raw}

    area_weights: dict[str, float] = {}
    if area_ids:
        area_raw = {}
        for k in sorted(area_ids):
            contained = [weights[j] for j in weights if track_areas is not None and track_areas.get(j) == k]
            area_raw[k] = max(contained) if contained else score_floor
        area_total = sum(area_raw.values())
        area_weights = {k: area_raw[k] / area_total for k in area_raw}
    return SemanticPrior(weights, area_weights, frozenset(), prompt_version, floor=score_floor)


def prune(prior: SemanticPrior, prune_ratio: float) -> SemanticPrior:
    """Drop tracks whose weight is below prune_ratio of the max; argmax survives."""
    if not (0.0 <= prune_ratio < 1.0):
        raise ValueError(f"prune_ratio must be in [0, 1), got {prune_ratio}")
    if prune_ratio == 0.0 or not prior.object_weights:
        return prior
    top = max(prior.object_weights.values())
    newly = {j for j, w in prior.object_weights.items() if w / top < prune_ratio}
    if not newly:
        return prior
    survivors = {j: w for j, w in prior.object_weights.items() if j not in newly}
    total = sum(survivors.values())
    return replace(
        prior,
        object_weights={j: w / total for j, w in survivors.items()},
        pruned=prior.pruned | newly,
    )


def uniform_prior(track_ids, area_ids=(), prompt_version: int = 0, floor: float = 1e-3) -> SemanticPrior:
    """Fallback prior when the prompt is unparsable or semantics are disabled."""
    ids = sorted(track_ids)
    weights = {j: 1.0 / len(ids) for j in ids} if ids else {}
    areas = sorted(area_ids)
    area_weights = {k: 1.0 / len(areas) for k in areas} if areas else {}
    return SemanticPrior(weights, area_weights, frozenset(), prompt_version, floor)


# ---------------------------------------------------------------------------
# scoring rounds


class MockBackend:
    """Synchronous, pure-function scoring backend; counts calls for probes."""

    def __init__(self, ontology: Ontology, scenario: Scenario, params: SemanticParams):
        self.ontology = ontology
        self.scenario = scenario
        self.params = params
        self.calls = 0

    def score(self, query: PromptQuery, prompt_text: str, memory: TrackMemory):
        self.calls += 1
        tracks = memory.tracks
        vlm = {
            tid: mock_vlm_score(
                query,
                tracks[tid].descriptor,
                tracks,
                self.ontology,
                areas=self.scenario.areas,
                candidate_id=tid,
                near_radius=self.params.near_radius,
            )
            for tid in sorted(tracks)
        }
        label_scores = mock_llm_rank(query, [t.descriptor.label for t in tracks.values()], self.ontology)
        llm = {tid: label_scores[tracks[tid].descriptor.label] for tid in sorted(tracks)}
        return vlm, llm


class SemanticScorer:
    """Runs scoring rounds and versions the prior across prompt updates.

    The belief engine only ever reads the most recent *completed* prior; a
    round that fails (backend unavailable) leaves the previous prior in
    place, and a round computed for a stale prompt version is discarded.
    """

    def __init__(self, backend, ontology: Ontology, scenario: Scenario, params: SemanticParams):
        self.backend = backend
        self.ontology = ontology
        self.scenario = scenario
        self.params = params
        self.version = 0
        self._text: str | None = None
        self._query: PromptQuery | None = None
        self._prior = SemanticPrior(floor=params.score_floor)

    @property
    def query(self) -> PromptQuery | None:
        return self._query

    @property
    def prior(self) -> SemanticPrior:
        return self._prior

    def set_prompt(self, text: str) -> bool:
        """Install a new mission prompt; returns True when the version bumped."""
        if text == self._text:
            return False
        self._text = text
        self.version += 1
        try:
            self._query = parse_prompt(text, self.ontology)
        except UnparsablePrompt:
            self._query = None  # fall back to a uniform prior
        return True

    def score_round(self, memory: TrackMemory) -> SemanticPrior:
        """One full scoring round over the current track memory."""
        version = self.version
        ids = memory.ids()
        area_ids = [a.id for a in self.scenario.areas]
        if not ids:
            self._prior = SemanticPrior(
                {}, {}, frozenset(), prompt_version=version, floor=self.params.score_floor
            )
            return self._prior
        if self._query is None:
            self._prior = uniform_prior(ids, area_ids, version, self.params.score_floor)
            return self._prior
        try:
            vlm, llm = self.backend.score(self._query, self._text or "", memory)
        except BackendUnavailable:
            return self._prior
        if version != self.version:
            return self._prior  # prompt changed mid-round; discard the stale result
        track_areas = {tid: area_of(memory.tracks[tid].position_estimate, self.scenario) for tid in ids}
        prior = combine(
            vlm,
            llm,
            self.params.vlm_exponent,
            self.params.llm_exponent,
            self.params.score_floor,
            track_areas=track_areas,
            area_ids=area_ids,
            prompt_version=version,
        )
        self._prior = prune(prior, self.params.prune_ratio)
        return self._prior

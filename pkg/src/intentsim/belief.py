"""Dual-layer recursive Bayesian intent beliefs with a semantic factor.

Two tempered Bayes filters run side by side on one clock: a navigation
belief over areas and a manipulation belief over tracked objects. Each tick
both are raised to a forgetting power, multiplied by a geometric likelihood
and by the semantic prior weight (raised to the fusion exponent), and
renormalized; the per-object posterior is the product of the object's
manipulation mass and the navigation mass of its containing area.

Setting the fusion exponent to zero reproduces the semantics-free baseline
exactly: the prior factor becomes 1.0 and pruning is not applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EmptyCandidateSet
from .perception import TrackMemory
from .semantics import SemanticPrior
from .world import DegenerateTarget, Pose, VelocityCommand, bearing_to, distance

UNDERFLOW_LIMIT = 1e-300


@dataclass(frozen=True)
class BeliefParams:
    kappa_nav: float = 2.0  # heading-alignment concentration, navigation layer
    sigma_nav: float = 5.0  # meters; distance decay scale, navigation layer
    kappa_man: float = 3.0  # heading-alignment concentration, manipulation layer
    sigma_man: float = 1.5  # meters; distance decay scale, manipulation layer
    forgetting: float = 0.9  # tempering exponent on the previous belief, in (0, 1]
    semantic_gain: float = 1.0  # fusion exponent on the semantic prior; 0 = baseline
    u_min: float = 0.05  # m/s; slower commands are uninformative for navigation
    entry_mass: float = 1e-3  # mass for tracks entering (or re-entering) the belief

    def validate(self) -> "BeliefParams":
        if not (0.0 < self.forgetting <= 1.0):
            raise ValueError(f"forgetting must be in (0, 1], got {self.forgetting}")
        if self.semantic_gain < 0.0:
            raise ValueError(f"semantic_gain must be >= 0, got {self.semantic_gain}")
        for name in ("kappa_nav", "sigma_nav", "kappa_man", "sigma_man", "u_min", "entry_mass"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        return self


@dataclass(frozen=True)
class BeliefState:
    nav: dict[str, float]
    man: dict[str, float]
    posterior: dict[str, float]
    pruned: frozenset[str] = frozenset()
    top: tuple[str, float] | None = None
    tick: int = 0
    prompt_version: int = 0
    underflow: tuple[str, ...] = ()  # layers reset to uniform this tick


def _normalize(masses: dict[str, float]) -> tuple[dict[str, float], bool]:
    """Normalize to a distribution; all-underflowed or non-finite resets to uniform."""
    if not masses:
        return {}, False
    finite = all(math.isfinite(m) for m in masses.values())
    peak = max(masses.values()) if finite else 0.0
    if not finite or peak < UNDERFLOW_LIMIT:
        n = len(masses)
        return {k: 1.0 / n for k in masses}, True
    total = sum(masses.values())
    return {k: m / total for k, m in masses.items()}, False


def _argmax(dist: dict[str, float]) -> tuple[str, float] | None:
    if not dist:
        return None
    best = min(dist.items(), key=lambda kv: (-kv[1], kv[0]))
    return (best[0], best[1])


def _posterior(
    nav: dict[str, float], man: dict[str, float], track_areas: dict[str, str | None]
) -> tuple[dict[str, float], bool]:
    masses = {}
    for j, mj in man.items():
        area = track_areas.get(j)
        nav_factor = nav.get(area, 1.0) if area is not None else 1.0
        masses[j] = nav_factor * mj
    return _normalize(masses)


def _alignment(robot: Pose, point: tuple[float, float]) -> float:
    """cos(bearing) toward a point; 1.0 when already on top of it."""
    try:
        return math.cos(bearing_to(robot, point))
    except DegenerateTarget:
        return 1.0


def init_belief(scenario, memory: TrackMemory, prior: SemanticPrior | None) -> BeliefState:
    """Start beliefs from the semantic prior when present, else uniform."""
    area_ids = [a.id for a in scenario.areas]
    if prior is not None and prior.area_weights:
        nav, _ = _normalize(dict(prior.area_weights))
    else:
        nav = {k: 1.0 / len(area_ids) for k in area_ids}
    if prior is not None and prior.object_weights:
        man = dict(prior.object_weights)
    elif len(memory) > 0:
        ids = memory.ids()
        man = {j: 1.0 / len(ids) for j in ids}
    else:
        man = {}
    pruned = prior.pruned if prior is not None else frozenset()
    version = prior.prompt_version if prior is not None else 0
    track_areas = track_area_map(memory, scenario)
    posterior, _ = _posterior(nav, man, track_areas)
    return BeliefState(nav=nav, man=man, posterior=posterior, pruned=pruned, top=_argmax(posterior), tick=0, prompt_version=version)


def track_area_map(memory: TrackMemory, scenario) -> dict[str, str | None]:
    from .world import area_of  # local import keeps module deps one-way

    return {tid: area_of(memory.tracks[tid].position_estimate, scenario) for tid in memory.ids()}


def nav_likelihood(robot: Pose, cmd: VelocityCommand, areas, params: BeliefParams) -> dict[str, float]:
    """Evidence each area is the navigation goal given the operator command.

    Slow commands carry no information (all-ones); otherwise likelihood grows
    with heading alignment toward the area centroid (sign-corrected when
    reversing) and decays exponentially with distance.
    """
    if abs(cmd.v) < params.u_min:
        return {a.id: 1.0 for a in areas}
    out = {}
    sign = 1.0 if cmd.v > 0 else -1.0
    for a in areas:
        align = sign * _alignment(robot, a.centroid)
        d = distance((robot.x, robot.y), a.centroid)
        out[a.id] = math.exp(params.kappa_nav * align) * math.exp(-d / params.sigma_nav)
    return out


def manip_likelihood(robot: Pose, memory: TrackMemory, params: BeliefParams) -> dict[str, float]:
    """Evidence each tracked object is the manipulation goal.

    Heading alignment times exponential distance decay, scaled by the track's
    graspability and smoothed detector confidence.
    """
    if len(memory) == 0:
        raise EmptyCandidateSet("no tracks for manipulation likelihood")
    out = {}
    for tid in memory.ids():
        t = memory.tracks[tid]
        align = _alignment(robot, t.position_estimate)
        d = distance((robot.x, robot.y), t.position_estimate)
        out[tid] = (
            math.exp(params.kappa_man * align)
            * math.exp(-d / params.sigma_man)
            * t.graspability
            * t.smoothed_confidence
        )
    return out


def update(
    state: BeliefState,
    nav_l: dict[str, float],
    man_l: dict[str, float],
    prior: SemanticPrior | None,
    params: BeliefParams,
    track_areas: dict[str, str | None],
) -> BeliefState:
    """One recursive tick: temper, weight by likelihood and semantic factor, normalize."""
    lam = params.forgetting
    gamma = params.semantic_gain
    underflow = []

    nav_masses = {}
    for k in state.nav:
        factor = 1.0
        if prior is not None and prior.area_weights:
            factor = prior.area_weights.get(k, prior.floor) ** gamma
        nav_masses[k] = (state.nav[k] ** lam) * nav_l.get(k, 1.0) * factor
    nav, nav_reset = _normalize(nav_masses)
    if nav_reset:
        underflow.append("nav")

    pruned = state.pruned
    man_masses = {}
    for j in sorted(man_l):
        if j in pruned:
            continue
        factor = 1.0
        if prior is not None and prior.object_weights:
            factor = prior.object_weights.get(j, prior.floor) ** gamma
        base = state.man.get(j, params.entry_mass)
        man_masses[j] = (base ** lam) * man_l[j] * factor
    man, man_reset = _normalize(man_masses)
    if man_reset:
        underflow.append("man")

    posterior, post_reset = _posterior(nav, man, track_areas)
    if post_reset:
        underflow.append("posterior")

    return BeliefState(
        nav=nav,
        man=man,
        posterior=posterior,
        pruned=pruned,
        top=_argmax(posterior),
        tick=state.tick + 1,
        prompt_version=state.prompt_version,
        underflow=tuple(underflow),
    )


def reconcile_pruning(
    state: BeliefState,
    prior: SemanticPrior,
    track_areas: dict[str, str | None],
    params: BeliefParams,
) -> BeliefState:
    """Adopt the prior's pruning mask: drop newly pruned tracks, restore re-entrants.

    Tracks coming back in start from entry_mass before renormalization; the
    navigation belief is untouched.
    """
    man_masses = {}
    for j in sorted(prior.object_weights):
        man_masses[j] = state.man[j] if j in state.man and j not in state.pruned else params.entry_mass
    man, _ = _normalize(man_masses)
    posterior, _ = _posterior(state.nav, man, track_areas)
    return BeliefState(
        nav=state.nav,
        man=man,
        posterior=posterior,
        pruned=prior.pruned,
        top=_argmax(posterior),
        tick=state.tick,
        prompt_version=max(state.prompt_version, prior.prompt_version),
        underflow=state.underflow,
    )


def on_prompt_update(
    state: BeliefState,
    new_prior: SemanticPrior,
    track_areas: dict[str, str | None],
    params: BeliefParams,
) -> BeliefState:
    """Apply a prompt change: no-op unless the prior carries a newer version."""
    if new_prior.prompt_version <= state.prompt_version:
        return state
    return reconcile_pruning(state, new_prior, track_areas, params)

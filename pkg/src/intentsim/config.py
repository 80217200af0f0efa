"""Trial and suite configuration: strict JSON in, validated dataclasses out."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .assistance import CommitmentConfig
from .belief import BeliefParams
from .errors import ConfigError, IntentSimError
from .external import ExternalEndpoint
from .operators import OperatorProfile
from .perception import NoiseModel, SensorConfig
from .semantics import SemanticParams
from .world import Limits, Scenario, load_scenario

BACKENDS = ("mock", "external", "disabled")

DATA_DIR = Path(__file__).parent / "data"


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in DATA_DIR.glob("*.json") if p.stem != "ontology")


def resolve_scenario_path(name_or_path: str, base_dir: str | Path = ".") -> Path:
    """A bundled scenario name, or a path relative to the config file."""
    bundled = DATA_DIR / f"{name_or_path}.json"
    if bundled.exists():
        return bundled
    p = Path(name_or_path)
    if not p.is_absolute():
        p = Path(base_dir) / p
    return p


@dataclass(frozen=True)
class TrialConfig:
    scenario: str = "living_room"
    prompt: str = ""
    true_target: str = ""
    seed: int = 0
    max_ticks: int = 600
    backend: str = "mock"
    start_area: str | None = None
    name: str = ""
    operator: OperatorProfile = field(default_factory=OperatorProfile)
    belief: BeliefParams = field(default_factory=BeliefParams)
    commitment: CommitmentConfig = field(default_factory=CommitmentConfig)
    noise: NoiseModel = field(default_factory=NoiseModel)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    semantic: SemanticParams = field(default_factory=SemanticParams)
    endpoint: ExternalEndpoint | None = None
    limits: Limits = field(default_factory=Limits)

    def validate(self) -> "TrialConfig":
        if self.max_ticks <= 0:
            raise ConfigError(f"max_ticks must be > 0, got {self.max_ticks}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == "external" and self.endpoint is None:
            raise ConfigError("backend=external requires an endpoint")
        self.operator.validate()
        try:
            self.belief.validate()
        except ValueError as e:
            raise ConfigError(str(e)) from e
        self.commitment.validate()
        self.noise.validate()
        self.sensor.validate()
        return self


def _build(cls, raw: dict, path: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return cls(**raw)


def trial_config_from_dict(raw: dict, base_dir: str | Path = ".") -> TrialConfig:
    if not isinstance(raw, dict):
        raise ConfigError("trial config: top level must be an object")
    raw = dict(raw)
    sections = {}
    if "operator" in raw:
        op = dict(raw.pop("operator"))
        if "prompt_schedule" in op:
            op["prompt_schedule"] = tuple((int(t), str(s)) for t, s in op["prompt_schedule"])
        sections["operator"] = _build(OperatorProfile, op, "operator")
    if "belief" in raw:
        sections["belief"] = _build(BeliefParams, dict(raw.pop("belief")), "belief")
    if "commitment" in raw:
        sections["commitment"] = _build(CommitmentConfig, dict(raw.pop("commitment")), "commitment")
    if "noise" in raw:
        sections["noise"] = _build(NoiseModel, dict(raw.pop("noise")), "noise")
    if "sensor" in raw:
        sections["sensor"] = _build(SensorConfig, dict(raw.pop("sensor")), "sensor")
    if "semantic" in raw:
        sections["semantic"] = _build(SemanticParams, dict(raw.pop("semantic")), "semantic")
    if "limits" in raw:
        sections["limits"] = _build(Limits, dict(raw.pop("limits")), "limits")
    if "endpoint" in raw and raw["endpoint"] is not None:
        sections["endpoint"] = _build(ExternalEndpoint, dict(raw.pop("endpoint")), "endpoint")
    elif "endpoint" in raw:
        raw.pop("endpoint")

    allowed = {"scenario", "prompt", "true_target", "seed", "max_ticks", "backend", "start_area", "name"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"trial config: unknown keys {sorted(unknown)}")
    try:
        cfg = TrialConfig(**raw, **sections)
    except TypeError as e:
        raise ConfigError(f"trial config: {e}") from e
    cfg = replace(cfg, scenario=str(resolve_scenario_path(cfg.scenario, base_dir)))
    return cfg.validate()


def load_trial_config(path: str | Path) -> TrialConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read trial config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed trial config {path}: {e}") from e
    return trial_config_from_dict(raw, base_dir=path.parent)


def validate_against_scenario(cfg: TrialConfig, scenario: Scenario) -> None:
    if cfg.true_target and scenario.object_by_id(cfg.true_target) is None:
        raise ConfigError(f"true_target '{cfg.true_target}' not in scenario '{scenario.name}'")
    if cfg.operator.target and scenario.object_by_id(cfg.operator.target) is None:
        raise ConfigError(f"operator target '{cfg.operator.target}' not in scenario '{scenario.name}'")
    if cfg.start_area is not None and scenario.area_by_id(cfg.start_area) is None:
        raise ConfigError(f"start_area '{cfg.start_area}' not in scenario '{scenario.name}'")


@dataclass(frozen=True)
class SuiteConfig:
    name: str
    seed: int
    defaults: dict
    trials: tuple[dict, ...]
    base_dir: str = "."


def load_suite_config(path: str | Path) -> SuiteConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read suite config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed suite config {path}: {e}") from e
    allowed = {"name", "seed", "defaults", "trials"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"suite config: unknown keys {sorted(unknown)}")
    trials = raw.get("trials")
    if not trials:
        raise ConfigError("suite config: needs at least one trial")
    return SuiteConfig(
        name=str(raw.get("name", path.stem)),
        seed=int(raw.get("seed", 0)),
        defaults=dict(raw.get("defaults", {})),
        trials=tuple(dict(t) for t in trials),
        base_dir=str(path.parent),
    )


def merge_trial(defaults: dict, override: dict) -> dict:
    """Shallow merge with one nested level for the config sections."""
    merged = dict(defaults)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            inner = dict(merged[key])
            inner.update(value)
            merged[key] = inner
        else:
            merged[key] = value
    return merged


def build_backend(cfg: TrialConfig, ontology, scenario):
    """Instantiate the scoring backend named by the config (None when disabled)."""
    from .external import ExternalBackend
    from .semantics import MockBackend

    if cfg.backend == "disabled":
        return None
    if cfg.backend == "mock":
        return MockBackend(ontology, scenario, cfg.semantic)
    return ExternalBackend(cfg.endpoint, cfg.semantic)


def load_world(cfg: TrialConfig):
    """Load (scenario, ontology) for a validated config."""
    from .ontology import Ontology

    try:
        scenario = load_scenario(cfg.scenario)
        ontology = Ontology.load(scenario.ontology_path)
    except IntentSimError:
        raise
    validate_against_scenario(cfg, scenario)
    return scenario, ontology

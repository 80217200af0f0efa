"""Batch experiment runner: seeded trials, trial metrics, and suite reports.

Every trial runs twice per suite row (semantic arm and semantics-disabled
baseline, same seed), metrics follow the planned-study definitions, and all
outputs are byte-stable across reruns and worker counts.
"""

from __future__ import annotations

import json
import multiprocessing
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import rng as rng_streams
from .assistance import Phase
from .config import (
    SuiteConfig,
    TrialConfig,
    build_backend,
    load_world,
    merge_trial,
    trial_config_from_dict,
)
from .errors import ConfigError, IntentSimError, UnparsablePrompt
from .operators import operator_tick
from .semantics import parse_prompt
from .session import Session
from .world import TICK_DT

COMMIT_REASONS = ("committed", "accepted")
BOOTSTRAP_RESAMPLES = 1000


@dataclass(frozen=True)
class TrialMetrics:
    ttcp_s: float | None
    intent_correct: bool
    completion_s: float | None
    stability: float | None
    committed: bool
    timed_out: bool
    ticks: int
    prompt_kind: str
    category: str
    seed: int
    name: str = ""
    trace_path: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# trace metrics


def _meta(trace: list[dict]) -> dict:
    if not trace or trace[0].get("type") != "meta":
        raise ValueError("trace must start with a meta line")
    return trace[0]


def _tick_lines(trace: list[dict]) -> list[dict]:
    return [line for line in trace if line.get("type") == "tick"]


def _event_lines(trace: list[dict]) -> list[dict]:
    return [line for line in trace if line.get("type") == "event"]


def compute_ttcp(trace: list[dict]) -> float | None:
    """Seconds from trial start to the first strict threshold crossing.

    The clock starts at tick 0, so the scan duration counts toward the time;
    crossings themselves are evaluated from the inference phase onward, when
    the candidate memory is populated (a half-built candidate set makes the
    normalized top trivially confident).
    """
    meta = _meta(trace)
    theta, dt = meta["theta"], meta["dt"]
    for line in _tick_lines(trace):
        if line.get("phase") == Phase.SCAN.value:
            continue
        top = line.get("top")
        if top is not None and top[1] > theta:
            return line["tick"] * dt
    return None


def compute_completion(trace: list[dict]) -> float | None:
    """Seconds from commitment (phase -> assisting) to the reach event."""
    dt = _meta(trace)["dt"]
    commit_tick = None
    for e in _event_lines(trace):
        if e["reason"] in COMMIT_REASONS:
            commit_tick = e["tick"]
        elif e["reason"] == "reach" and commit_tick is not None:
            return (e["tick"] - commit_tick) * dt
    return None


def compute_stability(trace: list[dict], true_target: str) -> float | None:
    """Fraction of ticks the top stays correct, from the first correct tick on.

    Like TTCP, evaluated from the inference phase onward.
    """
    ticks = [line for line in _tick_lines(trace) if line.get("phase") != Phase.SCAN.value]
    first = None
    for i, line in enumerate(ticks):
        top = line.get("top")
        if top is not None and top[0] == true_target:
            first = i
            break
    if first is None:
        return None
    window = ticks[first:]
    good = sum(1 for line in window if line.get("top") and line["top"][0] == true_target)
    return good / len(window)


def compute_accuracy(metrics: list[TrialMetrics]) -> float:
    """Fraction of trials whose predicted intent matched the true target."""
    if not metrics:
        raise ValueError("accuracy over an empty suite is undefined")
    return sum(1 for m in metrics if m.intent_correct) / len(metrics)


def _intent_correct(trace: list[dict], true_target: str) -> tuple[bool, bool]:
    """(correct, committed): evaluated at the last commitment, else at trial end."""
    commit_target = None
    for e in _event_lines(trace):
        if e["reason"] in COMMIT_REASONS:
            commit_target = e["target"]
    if commit_target is not None:
        return commit_target == true_target, True
    ticks = _tick_lines(trace)
    if not ticks:
        return False, False
    top = ticks[-1].get("top")
    return bool(top and top[0] == true_target), False


# ---------------------------------------------------------------------------
# single trial


def _prompt_kind(cfg: TrialConfig, ontology) -> str:
    if not cfg.prompt:
        return "none"
    try:
        return parse_prompt(cfg.prompt, ontology).kind
    except UnparsablePrompt:
        return "unparsable"


def _root_category(category: str, ontology) -> str:
    node = category
    while ontology.parent(node) is not None:
        node = ontology.parent(node)
    return node


def run_trial(
    cfg: TrialConfig,
    out_dir: str | Path | None = None,
    trace_stem: str = "trace",
    world=None,
    keep_trace: bool = False,
):
    """Run one seeded trial end to end; returns TrialMetrics (and the trace
    when keep_trace is set)."""
    scenario, ontology = world if world is not None else load_world(cfg)
    backend = build_backend(cfg, ontology, scenario)
    session = Session(
        scenario,
        ontology,
        belief_params=cfg.belief,
        commitment=cfg.commitment,
        noise=cfg.noise,
        sensor=cfg.sensor,
        semantic_params=cfg.semantic,
        backend=backend,
        prompt=cfg.prompt or None,
        seed=cfg.seed,
        start_area=cfg.start_area,
        limits=cfg.limits,
    )
    rng_op = rng_streams.substream(cfg.seed, rng_streams.OPERATOR)
    prompt_kind = _prompt_kind(cfg, ontology)
    true_obj = scenario.object_by_id(cfg.true_target) if cfg.true_target else None
    category = _root_category(true_obj.category, ontology) if true_obj is not None else "none"
    meta = {
        "type": "meta",
        "scenario": scenario.name,
        "seed": cfg.seed,
        "dt": TICK_DT,
        "theta": cfg.commitment.threshold,
        "true_target": cfg.true_target,
        "backend": cfg.backend,
        "semantic_gain": cfg.belief.semantic_gain,
        "prompt": cfg.prompt,
        "prompt_kind": prompt_kind,
        "max_ticks": cfg.max_ticks,
        "name": cfg.name,
    }
    trace: list[dict] = [meta]
    while session.tick < cfg.max_ticks and session.fsm.phase != Phase.REACHED:
        phase = session.fsm.phase
        ceded = phase == Phase.SCAN or (phase == Phase.ASSISTING and cfg.commitment.mode == "autonomous")
        event = operator_tick(
            cfg.operator,
            session.pose,
            scenario,
            session.tick + 1,
            rng_op,
            phase=phase,
            suggested_since=session.fsm.suggested_tick,
            ceded=ceded,
            limits=cfg.limits,
        )
        events_before = len(session.events)
        line = session.step(event)
        trace.append(line)
        trace.extend(session.events[events_before:])

    timed_out = session.fsm.phase != Phase.REACHED
    correct, committed = _intent_correct(trace, cfg.true_target)
    trace_path = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        trace_path = str(out_dir / f"{trace_stem}.jsonl")
        write_trace(trace, trace_path)
    metrics = TrialMetrics(
        ttcp_s=compute_ttcp(trace),
        intent_correct=correct,
        completion_s=compute_completion(trace) if committed and not timed_out else None,
        stability=compute_stability(trace, cfg.true_target) if cfg.true_target else None,
        committed=committed,
        timed_out=timed_out,
        ticks=session.tick,
        prompt_kind=prompt_kind,
        category=category,
        seed=cfg.seed,
        name=cfg.name,
        trace_path=trace_path,
    )
    if keep_trace:
        return metrics, trace
    return metrics


def write_trace(trace: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in trace:
            fh.write(json.dumps(line, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_trace(path: str | Path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# suites


def _run_task(task):
    idx, arm, cfg, out_dir = task
    try:
        metrics = run_trial(
            cfg,
            out_dir=out_dir,
            trace_stem=f"trial_{idx:04d}_{arm}",
        )
        return idx, arm, metrics.to_dict(), None
    except ConfigError as e:
        return idx, arm, None, f"ConfigError: {e}"
    except IntentSimError as e:
        return idx, arm, None, f"{type(e).__name__}: {e}"


def suite_tasks(suite: SuiteConfig, backend_override: str | None = None, seed_offset: int = 0, out_dir=None):
    """Expand a suite into (index, arm, config, out_dir) work items."""
    tasks = []
    for idx, override in enumerate(suite.trials):
        merged = merge_trial(suite.defaults, override)
        cfg = trial_config_from_dict(merged, base_dir=suite.base_dir)
        cfg = replace(cfg, seed=cfg.seed + seed_offset)
        if backend_override is not None:
            cfg = replace(cfg, backend=backend_override)
        semantic_cfg = cfg
        baseline_cfg = replace(cfg, backend="disabled")
        tasks.append((idx, "semantic", semantic_cfg, out_dir))
        tasks.append((idx, "baseline", baseline_cfg, out_dir))
    return tasks


def run_suite(
    suite: SuiteConfig,
    out_dir: str | Path | None = None,
    jobs: int = 1,
    backend_override: str | None = None,
    seed_offset: int = 0,
):
    """Run every trial under both arms; returns (report, ok).

    ok is False when any trial failed with a ConfigError; other per-trial
    errors are recorded in the report without halting the suite.
    """
    trace_dir = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        trace_dir = out_dir / "traces"
    tasks = suite_tasks(suite, backend_override, seed_offset, trace_dir)
    if jobs > 1:
        with multiprocessing.Pool(processes=jobs) as pool:
            results = pool.map(_run_task, tasks)
    else:
        results = [_run_task(t) for t in tasks]
    results.sort(key=lambda r: (r[0], r[1]))

    rows = []
    config_error = False
    for idx, arm, metrics, error in results:
        if error is not None and error.startswith("ConfigError"):
            config_error = True
        if metrics is not None and metrics.get("trace_path") and out_dir is not None:
            # keep reports byte-identical regardless of where they were written
            metrics = dict(metrics)
            metrics["trace_path"] = str(Path(metrics["trace_path"]).relative_to(out_dir))
        rows.append({"index": idx, "arm": arm, "metrics": metrics, "error": error})

    report = build_report(suite, rows)
    if out_dir is not None:
        (out_dir / "report.json").write_text(
            json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        (out_dir / "report.csv").write_text(report_csv(report), encoding="utf-8")
    return report, not config_error


_AGG_METRICS = ("ttcp_s", "completion_s", "stability")


def _bootstrap_ci(values: list[float], rng) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 1:
        return float(arr[0]), float(arr[0])
    means = np.empty(BOOTSTRAP_RESAMPLES)
    for i in range(BOOTSTRAP_RESAMPLES):
        means[i] = arr[rng.integers(0, arr.size, size=arr.size)].mean()
    return float(np.percentile(means, 2.5)), float(np.percentile(means, 97.5))


def _aggregate(rows: list[dict], suite_seed: int, arm: str, group_type: str, group: str) -> list[dict]:
    out = []
    metrics_rows = [r["metrics"] for r in rows if r["metrics"] is not None]
    for metric in _AGG_METRICS:
        values = [m[metric] for m in metrics_rows if m[metric] is not None]
        entry = {
            "arm": arm,
            "group_type": group_type,
            "group": group,
            "metric": metric,
            "n": len(values),
            "mean": None,
            "median": None,
            "ci_lo": None,
            "ci_hi": None,
        }
        if values:
            rng = rng_streams.substream(
                suite_seed, f"{rng_streams.BOOTSTRAP}/{arm}/{group_type}/{group}/{metric}"
            )
            entry["mean"] = float(np.mean(values))
            entry["median"] = float(np.median(values))
            entry["ci_lo"], entry["ci_hi"] = _bootstrap_ci(values, rng)
        out.append(entry)
    for metric, key in (("accuracy", "intent_correct"), ("committed", "committed")):
        values = [1.0 if m[key] else 0.0 for m in metrics_rows]
        entry = {
            "arm": arm,
            "group_type": group_type,
            "group": group,
            "metric": metric,
            "n": len(values),
            "mean": float(np.mean(values)) if values else None,
            "median": float(np.median(values)) if values else None,
            "ci_lo": None,
            "ci_hi": None,
        }
        if values:
            rng = rng_streams.substream(
                suite_seed, f"{rng_streams.BOOTSTRAP}/{arm}/{group_type}/{group}/{metric}"
            )
            entry["ci_lo"], entry["ci_hi"] = _bootstrap_ci(values, rng)
        out.append(entry)
    return out


def build_report(suite: SuiteConfig, rows: list[dict]) -> dict:
    arms = sorted({r["arm"] for r in rows})
    aggregates = []
    for arm in arms:
        arm_rows = [r for r in rows if r["arm"] == arm]
        aggregates.extend(_aggregate(arm_rows, suite.seed, arm, "all", "all"))
        for group_type, key in (("prompt_kind", "prompt_kind"), ("category", "category")):
            groups = sorted({r["metrics"][key] for r in arm_rows if r["metrics"] is not None})
            for group in groups:
                sub = [r for r in arm_rows if r["metrics"] is not None and r["metrics"][key] == group]
                aggregates.extend(_aggregate(sub, suite.seed, arm, group_type, group))

    semantic = [r["metrics"] for r in rows if r["arm"] == "semantic" and r["metrics"] is not None]
    stability_hits = sum(1 for m in semantic if m["stability"] is not None and m["stability"] >= 0.93)
    reference = {
        "stability_ge_093_rate": (stability_hits / len(semantic)) if semantic else None,
        "meets_093_in_95pct": (stability_hits / len(semantic) >= 0.95) if semantic else None,
    }
    errors = sorted({r["error"] for r in rows if r["error"]})
    return {
        "suite": suite.name,
        "seed": suite.seed,
        "trial_count": len(suite.trials),
        "arms": arms,
        "trials": rows,
        "aggregates": aggregates,
        "reference": reference,
        "errors": errors,
    }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def report_csv(report: dict) -> str:
    lines = ["arm,group_type,group,metric,n,mean,median,ci_lo,ci_hi"]
    for row in report["aggregates"]:
        lines.append(
            ",".join(
                [
                    row["arm"],
                    row["group_type"],
                    row["group"],
                    row["metric"],
                    str(row["n"]),
                    _fmt(row["mean"]),
                    _fmt(row["median"]),
                    _fmt(row["ci_lo"]),
                    _fmt(row["ci_hi"]),
                ]
            )
        )
    return "\n".join(lines) + "\n"

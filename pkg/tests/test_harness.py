from __future__ import annotations

import json

import pytest

from intentsim.cli import main as cli_main
from intentsim.config import (
    build_backend,
    load_suite_config,
    merge_trial,
    trial_config_from_dict,
)
from intentsim.errors import ConfigError
from intentsim.harness import (
    TrialMetrics,
    compute_accuracy,
    compute_completion,
    compute_stability,
    compute_ttcp,
    read_trace,
    run_suite,
    run_trial,
)


def meta_line(**over):
    base = {
        "type": "meta",
        "scenario": "synthetic",
        "seed": 0,
        "dt": 0.1,
        "theta": 0.85,
        "true_target": "goal",
        "backend": "mock",
        "semantic_gain": 1.0,
        "prompt": "bring me the goal",
        "prompt_kind": "specific",
        "max_ticks": 200,
        "name": "",
    }
    base.update(over)
    return base


def tick_line(tick, phase, top):
    return {"type": "tick", "tick": tick, "phase": phase, "top": top}


def event_line(tick, reason, target="goal"):
    return {"type": "event", "tick": tick, "phase": "assisting", "target": target, "reason": reason}


class TestMetricClosedForms:
    """Each metric checked against hand-built synthetic traces."""

    def test_ttcp_absent_when_never_crossed(self):
        trace = [meta_line()] + [tick_line(t, "inference", ["goal", 0.5]) for t in range(1, 11)]
        assert compute_ttcp(trace) is None

    def test_ttcp_first_crossing_tick_73(self):
        trace = [meta_line()]
        for t in range(1, 81):
            p = 0.9 if t >= 73 else 0.2
            trace.append(tick_line(t, "inference", ["goal", p]))
        assert compute_ttcp(trace) == pytest.approx(7.3)

    def test_ttcp_first_post_scan_tick_after_40_tick_scan(self):
        trace = [meta_line()]
        for t in range(1, 41):
            trace.append(tick_line(t, "scan", ["goal", 0.99]))  # scan ticks never count
        trace.append(tick_line(41, "inference", ["goal", 0.9]))
        assert compute_ttcp(trace) == pytest.approx(4.1)

    def test_ttcp_strict_inequality(self):
        trace = [meta_line()] + [tick_line(1, "inference", ["goal", 0.85])]
        assert compute_ttcp(trace) is None

    def test_completion_difference(self):
        trace = [meta_line()]
        trace.append(event_line(80, "committed"))
        trace.append(event_line(195, "reach"))
        assert compute_completion(trace) == pytest.approx(11.5)

    def test_completion_absent_when_aborted_before_reach(self):
        trace = [meta_line(), event_line(80, "committed"), event_line(95, "override")]
        assert compute_completion(trace) is None

    def test_completion_absent_when_never_committed(self):
        trace = [meta_line()] + [tick_line(t, "inference", None) for t in range(1, 11)]
        assert compute_completion(trace) is None

    def test_stability_perfect_from_first_correct(self):
        trace = [meta_line()]
        for t in range(1, 50):
            trace.append(tick_line(t, "inference", ["other", 0.4]))
        for t in range(50, 150):
            trace.append(tick_line(t, "inference", ["goal", 0.9]))
        assert compute_stability(trace, "goal") == pytest.approx(1.0)

    def test_stability_ninety_of_hundred(self):
        trace = [meta_line()]
        # first correct at tick 1; then 100 ticks total, 10 of them wrong
        for t in range(1, 101):
            target = "other" if 40 < t <= 50 else "goal"
            trace.append(tick_line(t, "inference", [target, 0.9]))
        assert compute_stability(trace, "goal") == pytest.approx(0.9)

    def test_stability_absent_when_never_correct(self):
        trace = [meta_line()] + [tick_line(t, "inference", ["other", 0.9]) for t in range(1, 11)]
        assert compute_stability(trace, "goal") is None

    def test_accuracy_division(self):
        metrics = [
            TrialMetrics(None, i < 184, None, None, False, False, 10, "specific", "food", i)
            for i in range(200)
        ]
        assert compute_accuracy(metrics) == pytest.approx(0.92)

    def test_accuracy_empty_suite_rejected(self):
        with pytest.raises(ValueError):
            compute_accuracy([])

    def test_accuracy_all_correct(self):
        metrics = [
            TrialMetrics(1.0, True, None, None, False, False, 10, "specific", "food", i) for i in range(7)
        ]
        assert compute_accuracy(metrics) == 1.0


def trial_dict(**over):
    base = {
        "prompt": "Bring me the red mug",
        "true_target": "obj_mug_red",
        "seed": 11,
        "max_ticks": 300,
        "backend": "mock",
        "operator": {"kind": "direct", "target": "obj_mug_red"},
    }
    base.update(over)
    return base


class TestRunTrial:
    def test_e2e_commit_on_true_target_from_fixed_start(self):
        cfg = trial_config_from_dict(trial_dict())
        metrics = run_trial(cfg)
        assert metrics.committed
        assert metrics.intent_correct
        assert metrics.completion_s is not None
        assert metrics.ttcp_s is not None
        assert not metrics.timed_out

    def test_idle_disabled_never_crosses(self):
        cfg = trial_config_from_dict(
            trial_dict(backend="disabled", max_ticks=150, operator={"kind": "idle"})
        )
        metrics = run_trial(cfg)
        assert metrics.ttcp_s is None
        assert not metrics.committed
        assert metrics.completion_s is None
        assert metrics.timed_out

    def test_same_seed_byte_identical(self, tmp_path):
        cfg = trial_config_from_dict(trial_dict(max_ticks=120))
        m1 = run_trial(cfg, out_dir=tmp_path / "a")
        m2 = run_trial(cfg, out_dir=tmp_path / "b")
        assert m1.to_dict() | {"trace_path": ""} == m2.to_dict() | {"trace_path": ""}
        a = (tmp_path / "a" / "trace.jsonl").read_bytes()
        b = (tmp_path / "b" / "trace.jsonl").read_bytes()
        assert a == b

    def test_trace_round_trips(self, tmp_path):
        cfg = trial_config_from_dict(trial_dict(max_ticks=60))
        metrics, trace = run_trial(cfg, out_dir=tmp_path, keep_trace=True)
        loaded = read_trace(metrics.trace_path)
        assert loaded == json.loads(json.dumps(trace))

    def test_disabled_backend_never_scores(self, monkeypatch):
        """Call-count probe: the baseline arm never touches the scoring path."""
        import intentsim.semantics as semantics_mod

        calls = {"score": 0, "vlm": 0}
        original = semantics_mod.MockBackend.score

        def counting_score(self, *args, **kwargs):
            calls["score"] += 1
            return original(self, *args, **kwargs)

        monkeypatch.setattr(semantics_mod.MockBackend, "score", counting_score)
        monkeypatch.setattr(
            semantics_mod,
            "mock_vlm_score",
            lambda *a, **k: calls.__setitem__("vlm", calls["vlm"] + 1) or 0.5,
        )
        cfg = trial_config_from_dict(trial_dict(backend="disabled", max_ticks=80))
        assert build_backend(cfg, None, None) is None
        _, trace = run_trial(cfg, keep_trace=True)
        assert calls == {"score": 0, "vlm": 0}
        assert all(line.get("sem") is None for line in trace if line.get("type") == "tick")

    def test_mock_backend_called_every_tick(self, living_room, ontology):
        from intentsim.config import load_world

        cfg = trial_config_from_dict(trial_dict(max_ticks=70))
        scenario, onto = load_world(cfg)
        backend = build_backend(cfg, onto, scenario)
        from intentsim.session import Session

        session = Session(scenario, onto, backend=backend, prompt=cfg.prompt, seed=1)
        for _ in range(10):
            session.step(None)
        assert backend.calls == 10

    def test_config_errors(self):
        with pytest.raises(ConfigError):
            trial_config_from_dict(trial_dict(max_ticks=0))
        with pytest.raises(ConfigError):
            trial_config_from_dict(trial_dict(backend="quantum"))
        with pytest.raises(ConfigError):
            trial_config_from_dict(trial_dict(bogus_key=1))
        with pytest.raises(ConfigError):
            run_trial(trial_config_from_dict(trial_dict(true_target="obj_missing")))

    def test_unknown_section_key_rejected(self):
        with pytest.raises(ConfigError):
            trial_config_from_dict(trial_dict(operator={"kind": "direct", "target": "x", "speed": 3}))


def suite_dict(n_trials=2, **defaults_over):
    defaults = trial_dict(max_ticks=150)
    defaults.update(defaults_over)
    return {
        "name": "mini",
        "seed": 5,
        "defaults": defaults,
        "trials": [{"seed": 100 + i, "name": f"t{i}"} for i in range(n_trials)],
    }


def write_suite(tmp_path, payload, name="suite.json"):
    p = tmp_path / name
    p.write_text(json.dumps(payload), encoding="utf-8")
    return p


class TestRunSuite:
    def test_one_trial_two_arms(self, tmp_path):
        suite = load_suite_config(write_suite(tmp_path, suite_dict(1)))
        report, ok = run_suite(suite, out_dir=tmp_path / "out")
        assert ok
        assert report["arms"] == ["baseline", "semantic"]
        assert len(report["trials"]) == 2
        assert (tmp_path / "out" / "report.csv").exists()
        assert (tmp_path / "out" / "report.json").exists()

    def test_rerun_identical_bytes(self, tmp_path):
        suite = load_suite_config(write_suite(tmp_path, suite_dict(2)))
        run_suite(suite, out_dir=tmp_path / "o1")
        run_suite(suite, out_dir=tmp_path / "o2")
        assert (tmp_path / "o1" / "report.csv").read_bytes() == (tmp_path / "o2" / "report.csv").read_bytes()
        assert (tmp_path / "o1" / "report.json").read_bytes() == (tmp_path / "o2" / "report.json").read_bytes()

    def test_jobs_do_not_change_bytes(self, tmp_path):
        suite = load_suite_config(write_suite(tmp_path, suite_dict(3)))
        run_suite(suite, out_dir=tmp_path / "serial", jobs=1)
        run_suite(suite, out_dir=tmp_path / "parallel", jobs=2)
        assert (tmp_path / "serial" / "report.csv").read_bytes() == (tmp_path / "parallel" / "report.csv").read_bytes()
        for p in sorted((tmp_path / "serial" / "traces").iterdir()):
            q = tmp_path / "parallel" / "traces" / p.name
            assert p.read_bytes() == q.read_bytes(), p.name

    def test_prompt_kind_grouping(self, tmp_path):
        payload = {
            "name": "kinds",
            "seed": 1,
            "defaults": trial_dict(max_ticks=120, commitment={"policy": "require_accept"},
                                   operator={"kind": "direct", "target": "obj_mug_red", "accept_policy": "never"}),
            "trials": [
                {"prompt": "Bring me the red mug", "seed": 1},
                {"prompt": "Pick up a drink", "true_target": "obj_soda", "seed": 2},
                {"prompt": "Fetch the cup next to the laptop", "true_target": "obj_mug_white", "seed": 3},
            ],
        }
        suite = load_suite_config(write_suite(tmp_path, payload))
        report, ok = run_suite(suite, out_dir=tmp_path / "out")
        assert ok
        kinds = {
            r["group"]
            for r in report["aggregates"]
            if r["group_type"] == "prompt_kind" and r["arm"] == "semantic"
        }
        assert kinds == {"specific", "categorical", "relational"}

    def test_per_trial_errors_do_not_halt(self, tmp_path):
        payload = suite_dict(1)
        payload["trials"].append({"seed": 7, "true_target": "obj_not_there"})
        suite = load_suite_config(write_suite(tmp_path, payload))
        report, ok = run_suite(suite, out_dir=tmp_path / "out")
        assert not ok  # ConfigError present
        assert any(r["error"] for r in report["trials"])
        assert any(r["error"] is None for r in report["trials"])

    def test_seed_offset_changes_seeds(self, tmp_path):
        suite = load_suite_config(write_suite(tmp_path, suite_dict(1)))
        report, _ = run_suite(suite, seed_offset=1000)
        seeds = {r["metrics"]["seed"] for r in report["trials"] if r["metrics"]}
        assert seeds == {1100}

    def test_merge_trial_nested(self):
        merged = merge_trial({"operator": {"kind": "idle"}, "seed": 1}, {"operator": {"target": "x"}})
        assert merged["operator"] == {"kind": "idle", "target": "x"}
        assert merged["seed"] == 1


class TestCli:
    def test_trial_and_metrics_commands(self, tmp_path, capsys):
        cfg_path = tmp_path / "trial.json"
        cfg_path.write_text(json.dumps(trial_dict(max_ticks=120)), encoding="utf-8")
        assert cli_main(["trial", "--config", str(cfg_path), "--out", str(tmp_path / "out")]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["committed"] is True
        assert cli_main(["metrics", "--trace", str(tmp_path / "out" / "trace.jsonl")]) == 0
        metrics = json.loads(capsys.readouterr().out)
        assert metrics["ttcp_s"] == out["ttcp_s"]

    def test_run_command(self, tmp_path, capsys):
        suite_path = write_suite(tmp_path, suite_dict(1))
        assert cli_main(["run", "--suite", str(suite_path), "--out", str(tmp_path / "out"), "--jobs", "1"]) == 0
        assert (tmp_path / "out" / "report.csv").exists()

    def test_bad_config_exit_code(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{}", encoding="utf-8")
        assert cli_main(["run", "--suite", str(p), "--out", str(tmp_path / "o")]) == 2

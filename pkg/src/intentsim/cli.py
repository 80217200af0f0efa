"""Command line entry points: suite runner, single trial, trace metrics, service."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import load_suite_config, load_trial_config
from .errors import ConfigError, IntentSimError
from .harness import compute_completion, compute_stability, compute_ttcp, read_trace, run_suite, run_trial


def _cmd_run(args) -> int:
    suite = load_suite_config(args.suite)
    report, ok = run_suite(
        suite,
        out_dir=args.out,
        jobs=args.jobs,
        backend_override=args.backend,
        seed_offset=args.seed_offset,
    )
    print(f"suite '{report['suite']}': {report['trial_count']} trials x {len(report['arms'])} arms -> {args.out}")
    if report["errors"]:
        for err in report["errors"]:
            print(f"  error: {err}", file=sys.stderr)
    return 0 if ok else 1


def _cmd_trial(args) -> int:
    cfg = load_trial_config(args.config)
    metrics = run_trial(cfg, out_dir=args.out, trace_stem="trace")
    print(json.dumps(metrics.to_dict(), sort_keys=True, indent=2))
    return 0


def _cmd_metrics(args) -> int:
    trace = read_trace(args.trace)
    meta = trace[0]
    out = {
        "ttcp_s": compute_ttcp(trace),
        "completion_s": compute_completion(trace),
        "stability": compute_stability(trace, meta.get("true_target", "")),
        "ticks": max((l["tick"] for l in trace if l.get("type") == "tick"), default=0),
    }
    print(json.dumps(out, sort_keys=True, indent=2))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app()
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="intentsim", description="Intent-inference simulator toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a trial suite under both arms")
    run_p.add_argument("--suite", required=True)
    run_p.add_argument("--out", required=True)
    run_p.add_argument("--jobs", type=int, default=1)
    run_p.add_argument("--backend", choices=["mock", "external", "disabled"], default=None)
    run_p.add_argument("--seed-offset", type=int, default=0)
    run_p.set_defaults(func=_cmd_run)

    trial_p = sub.add_parser("trial", help="run a single trial")
    trial_p.add_argument("--config", required=True)
    trial_p.add_argument("--out", required=True)
    trial_p.set_defaults(func=_cmd_trial)

    metrics_p = sub.add_parser("metrics", help="compute metrics from a trace file")
    metrics_p.add_argument("--trace", required=True)
    metrics_p.set_defaults(func=_cmd_metrics)

    serve_p = sub.add_parser("serve", help="run the live session service")
    serve_p.add_argument("--host", default=os.environ.get("INTENTSIM_HOST", "127.0.0.1"))
    serve_p.add_argument("--port", type=int, default=int(os.environ.get("INTENTSIM_PORT", "8008")))
    serve_p.set_defaults(func=_cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except IntentSimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

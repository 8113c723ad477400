"""Command-line front end.

Verbs: check (exhaustive exploration), fuzz (randomized), valency
(execution graph + DOT), replay (verify a serialized trace), bound
(per-attempt step bound).  Verdicts print as JSON on stdout; exit codes:
0 pass, 2 property violation, 3 depth limit, 64 usage, 65 bad config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import checker, simulator, valency
from .config import ExperimentConfig
from .core import ConfigError, RcError, digest
from .experiment import Experiment
from .programs import static_bound

EXIT_USAGE = 64
EXIT_CONFIG = 65


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("error: %s\n" % message)
        raise SystemExit(EXIT_USAGE)


def _build_parser():
    p = _Parser(prog="rclab", description=__doc__)
    sub = p.add_subparsers(dest="verb")

    def common(sp):
        sp.add_argument("--config", required=True, help="experiment config (JSON)")
        sp.add_argument("--override", action="append", default=[], metavar="K=V")
        sp.add_argument("--out", help="output file (counterexample trace / DOT graph)")
        sp.add_argument("--jobs", type=int,
                        default=int(os.environ.get("RC_LAB_JOBS", "0")) or None)
        sp.add_argument("--depth", type=int)
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("check", help="exhaustive exploration")
    common(sp)
    sp.add_argument("--no-memo", action="store_true")

    sp = sub.add_parser("fuzz", help="randomized exploration")
    common(sp)
    sp.add_argument("--episodes", type=int, default=1000)

    sp = sub.add_parser("valency", help="execution graph and valency classes")
    common(sp)

    sp = sub.add_parser("bound", help="static per-attempt step bound")
    common(sp)

    sp = sub.add_parser("replay", help="verify a serialized trace")
    sp.add_argument("--trace", required=True)
    return p


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config)
    if args.override:
        cfg = cfg.with_overrides(args.override)
    updates = {}
    if getattr(args, "depth", None) is not None:
        updates["depth"] = args.depth
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if updates:
        d = cfg.to_dict()
        d.update(updates)
        cfg = ExperimentConfig.from_dict(d)
    return cfg


def _emit_counterexample(verdict, exp, out):
    if verdict.trace_labels is None:
        return None
    path = out or "counterexample.jsonl"
    trace, final = simulator.run(exp, verdict.trace_labels)
    simulator.write_trace(trace, path, final_hash=digest(final))
    return path


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.verb is None:
        _build_parser().print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return _dispatch(args)
    except ConfigError as e:
        sys.stderr.write("config error: %s\n" % e)
        return EXIT_CONFIG
    except RcError as e:
        sys.stderr.write("error: %s\n" % e)
        return EXIT_FAIL_GENERIC


EXIT_FAIL_GENERIC = 1


def _dispatch(args) -> int:
    if args.verb == "replay":
        result = simulator.replay_file(args.trace)
        out = {
            "final_hash": result.final_hash,
            "matches_header": result.matches_header,
            "steps": len(result.digests) - 1,
        }
        print(json.dumps(out, sort_keys=True))
        return 0 if result.matches_header else checker.EXIT_FAIL

    cfg = _load_config(args)

    if args.verb == "bound":
        b = static_bound(cfg.program, cfg.n, f=cfg.f, cons=cfg.cons)
        print(json.dumps(b._asdict(), sort_keys=True))
        return 0

    exp = Experiment(cfg)

    if args.verb == "check":
        verdict = checker.explore(exp, memo=not args.no_memo)
        out = verdict.to_json()
        if verdict.result == "fail":
            path = _emit_counterexample(verdict, exp, args.out)
            if path:
                out["trace_file"] = path
        print(json.dumps(out, sort_keys=True))
        return verdict.exit_code

    if args.verb == "fuzz":
        verdict = checker.fuzz(exp, seed=cfg.seed, episodes=args.episodes)
        out = verdict.to_json()
        if verdict.result == "fail":
            path = _emit_counterexample(verdict, exp, args.out)
            if path:
                out["trace_file"] = path
        print(json.dumps(out, sort_keys=True))
        return verdict.exit_code

    if args.verb == "valency":
        g = valency.build_graph(exp)
        labels = valency.classify(g)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(valency.to_dot(g, labels))
        print(json.dumps(valency.summary(g, labels), sort_keys=True))
        return 0

    raise AssertionError("unreachable verb %r" % args.verb)


if __name__ == "__main__":
    raise SystemExit(main())

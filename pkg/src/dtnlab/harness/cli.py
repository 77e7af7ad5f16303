"""Command line entry point: ``dtnlab verify | suite | converge``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import ConfigError, DtnLabError
from .config import SCENARIOS, load_config, make_config
from .scenarios import convergence_study, run_scenario, run_suite

EXIT = {"pass": 0, "fail": 1, "indeterminate": 2}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dtnlab", description="Verify discrete Morse/Maslov index identities.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run one scenario")
    v.add_argument("scenario", choices=SCENARIOS)
    v.add_argument("--config", type=Path, help="YAML config (defaults used when omitted)")
    v.add_argument("--seed", type=int, help="override numeric.seed")
    v.add_argument("--out", type=Path, help="directory for report.json and traces")
    v.add_argument("--json", action="store_true", help="print the report to stdout")
    v.add_argument("--emit-traces", action="store_true", help="write CSV eigenvalue traces to --out")
    v.add_argument("--timing", action="store_true", help="include wall time in the report")

    s = sub.add_parser("suite", help="randomized corpus of rectangle scenarios")
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", type=Path)
    s.add_argument("--json", action="store_true")

    c = sub.add_parser("converge", help="grid refinement study against closed forms")
    c.add_argument("scenario", choices=("doubled-1d", "friedlander"))
    c.add_argument("--N", dest="n_list", default="16,32,64,128,256,512,1024,2048",
                   help="comma separated increasing cell counts")
    c.add_argument("--config", type=Path)
    c.add_argument("--json", action="store_true")
    return p


def _summary(rep) -> str:
    lines = [f"{rep.scenario}: {rep.status}"]
    for c in rep.checks:
        mark = "PASS" if c.passed else "FAIL"
        lines.append(f"  {mark} {c.name}: {c.lhs} {c.relation} {c.rhs}")
    for conv in rep.conventions:
        lines.append(f"  note {conv['name']}: {conv['lhs']} vs {conv['rhs']} ({'holds' if conv['holds'] else 'differs'})")
    lines.extend(f"  note {n}" for n in rep.notes)
    return "\n".join(lines)


def _verify(args) -> int:
    cfg = load_config(args.config, args.scenario) if args.config else make_config(args.scenario)
    updates = {}
    if args.seed is not None:
        updates["numeric"] = cfg.numeric.model_copy(update={"seed": args.seed})
    if args.out or args.emit_traces:
        updates["output"] = cfg.output.model_copy(update={
            "dir": str(args.out) if args.out else cfg.output.dir,
            "traces": cfg.output.traces or args.emit_traces})
    if updates:
        cfg = cfg.model_copy(update=updates)
    if cfg.output.traces and not cfg.output.dir:
        raise ConfigError("--emit-traces needs --out (or output.dir)")
    rep = run_scenario(cfg, timing=args.timing)
    text = rep.to_json()
    if cfg.output.dir:
        out = Path(cfg.output.dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text + "\n")
    print(text if args.json else _summary(rep))
    return EXIT[rep.status]


def _suite(args) -> int:
    agg = run_suite(args.seed, args.count, args.workers)
    text = json.dumps(agg, sort_keys=True, indent=2)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "suite.json").write_text(text + "\n")
        if agg["replay_config"]:
            (args.out / "replay.yaml").write_text(agg["replay_config"])
    if args.json:
        print(text)
    else:
        print(f"suite seed={agg['seed']} count={agg['count']} completed={agg['completed']}: {agg['status']}")
        for name, t in sorted(agg["totals"].items()):
            print(f"  {name}: {t['pass']} pass, {t['fail']} fail, {t['indeterminate']} indeterminate")
        if agg["replay_config"]:
            print("offending config:\n" + agg["replay_config"])
    return EXIT[agg["status"]]


def _converge(args) -> int:
    try:
        n_list = [int(x) for x in args.n_list.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --N list: {args.n_list}") from exc
    overrides = None
    if args.config:
        overrides = load_config(args.config, args.scenario).model_dump(mode="json")
        overrides.pop("scenario")
    table = convergence_study(args.scenario, n_list, overrides)
    if args.json:
        print(json.dumps(table, sort_keys=True, indent=2))
    else:
        for r in table["rows"]:
            print(f"N={r['N']:>6}  value={r['value']:>3}  expected={r['expected']:>3}  {'ok' if r['match'] else 'off'}")
        print(f"stabilized at N = {table['stabilized_at']}")
    return 0 if table["stabilized_at"] is not None else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return {"verify": _verify, "suite": _suite, "converge": _converge}[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DtnLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

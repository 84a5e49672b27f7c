"""Command-line front end.

`run` executes one config, a preset family, or a sweep, writing metrics.csv,
summary.json, and qtable.csv (plus events.csv with --trace) per run.
`compare` executes the same scenario under several relay policies on shared
seeds and writes compare.csv.

Precedence, lowest to highest: built-in defaults, --config file, preset
overrides, --set pairs, --policy/--seed flags. A preset's sweep axis is
applied last on its own key: it is the experiment variable.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from pathlib import Path

from .core import ConfigError, SimConfig, parse_config_text, parse_override
from .engine import run_simulation
from .presets import PRESETS, expand_sweep, get_preset
from .reporting import (
    compare_to_csv,
    events_to_csv,
    metrics_to_csv,
    qtable_to_csv,
    summarize,
    summary_to_json,
)

_SEED_RANGE = re.compile(r"^(-?\d+)\.\.(-?\d+)$")


def _preset_epilog() -> str:
    lines = ["presets:"]
    for name in sorted(PRESETS):
        lines.append(f"  {name:<8} {PRESETS[name].description}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="iqmr-sim",
        description="discrete-time simulator of a learning multi-UAV relay network",
        epilog=_preset_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--preset", help="named experiment family (see below)")
        p.add_argument("--seed", type=int, help="single RNG seed")
        p.add_argument("--seeds", help="inclusive seed range A..B, one run per seed")
        p.add_argument("--out", help="output directory (default: $IQMR_SIM_OUT or ./out)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="config override, repeatable")

    run = sub.add_parser("run", help="run one config, preset family, or sweep",
                         epilog=_preset_epilog(),
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    common(run)
    run.add_argument("--policy", choices=("iqmr", "vanilla_q", "greedy"),
                     help="relay policy override")
    run.add_argument("--trace", action="store_true",
                     help="also write per-slot events.csv")

    cmp_ = sub.add_parser("compare", help="run several policies on shared seeds",
                          epilog=_preset_epilog(),
                          formatter_class=argparse.RawDescriptionHelpFormatter)
    common(cmp_)
    cmp_.add_argument("--policies", default="iqmr,vanilla_q,greedy",
                      help="comma-separated policies (default: all three)")
    return ap


def _base_values(args) -> dict:
    values: dict = {}
    if args.config:
        values.update(parse_config_text(Path(args.config).read_text(encoding="utf-8"),
                                        source=args.config))
    if args.preset:
        values.update(get_preset(args.preset).overrides)
    for item in args.set or []:
        key, val = parse_override(item)
        values[key] = val
    return values


def _seed_list(args, preset) -> tuple[int, ...]:
    if args.seeds:
        m = _SEED_RANGE.match(args.seeds)
        if not m:
            raise ConfigError(f"--seeds must look like A..B, got {args.seeds!r}")
        a, b = int(m.group(1)), int(m.group(2))
        if b < a:
            raise ConfigError(f"--seeds range is empty: {args.seeds}")
        return tuple(range(a, b + 1))
    if args.seed is not None:
        return (args.seed,)
    if preset is not None:
        return preset.seeds
    return ()


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("IQMR_SIM_OUT") or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _expand_runs(args) -> list[tuple[str, SimConfig]]:
    preset = get_preset(args.preset) if args.preset else None
    values = _base_values(args)
    if getattr(args, "policy", None):
        values["policy"] = args.policy
    cfg = SimConfig(**values)
    seeds = _seed_list(args, preset)
    runs: list[tuple[str, SimConfig]] = []
    if preset is not None and preset.sweep_key:
        for v in preset.sweep_values:
            for s in seeds:
                run = cfg.copy_with(**{preset.sweep_key: v}, seed=s)
                label = f"{preset.sweep_key}={_fmt(v)}__seed={s}"
                runs.append((label, run.validate()))
    elif cfg.scenario_kind == "sweep":
        for label, c in expand_sweep(cfg):
            for s in (seeds or (cfg.seed,)):
                runs.append((f"{label}__seed={s}", c.copy_with(seed=s).validate()))
    else:
        seeds = seeds or (cfg.seed,)
        for s in seeds:
            label = f"seed={s}" if len(seeds) > 1 else "run"
            runs.append((label, cfg.copy_with(seed=s).validate()))
    return runs


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _write_run(out: Path, label: str, cfg: SimConfig, trace: bool,
               nested: bool) -> dict:
    res = run_simulation(cfg, trace=trace)
    target = out / label if nested else out
    target.mkdir(parents=True, exist_ok=True)
    metrics_to_csv(res.metrics, target / "metrics.csv")
    summary = summarize(res.metrics, cfg, label)
    summary_to_json(summary, target / "summary.json")
    qtable_to_csv(res.world.q, target / "qtable.csv")
    if trace:
        events_to_csv(res.world.events, target / "events.csv")
    return summary


def cmd_run(args) -> int:
    runs = _expand_runs(args)
    out = _out_dir(args)
    nested = len(runs) > 1
    for label, cfg in runs:
        s = _write_run(out, label, cfg, args.trace, nested)
        print(f"{label}: episodes={s['episodes']} "
              f"l3_delivered={s.get('l3_delivered', 0)} "
              f"final_residual_j={s.get('final_residual_j', 0.0):.1f} "
              f"-> {out / label if nested else out}")
    return 0


def cmd_compare(args) -> int:
    for item in args.set or []:
        if item.split("=", 1)[0].strip() == "policy":
            raise ConfigError(
                "compare varies the policy itself; pin one with 'run --policy' instead")
    preset = get_preset(args.preset) if args.preset else None
    if preset is not None and preset.sweep_key not in (None, "policy"):
        raise ConfigError(
            f"preset {preset.name!r} sweeps {preset.sweep_key!r}; compare only "
            "accepts presets whose axis is the policy")
    if preset is not None and preset.sweep_key == "policy":
        policies = tuple(str(v) for v in preset.sweep_values)
    else:
        policies = tuple(p.strip() for p in args.policies.split(",") if p.strip())
    if not policies:
        raise ConfigError("no policies to compare")
    values = _base_values(args)
    cfg = SimConfig(**values)
    seeds = _seed_list(args, preset) or (cfg.seed,)
    out = _out_dir(args)
    rows = []
    for policy in policies:
        for seed in seeds:
            run = cfg.copy_with(policy=policy, seed=seed).validate()
            res = run_simulation(run)
            s = summarize(res.metrics, run, f"{policy}__seed={seed}")
            rows.append({
                "policy": policy, "seed": seed,
                "l3_delivered": s.get("l3_delivered", 0),
                "final_residual_j": s.get("final_residual_j", 0.0),
                "cumulative_reward": s.get("cumulative_reward", 0.0),
                "dropped": s.get("dropped", 0),
                "decisions": s.get("decisions", 0),
            })
            print(f"{policy} seed={seed}: l3={rows[-1]['l3_delivered']} "
                  f"residual={rows[-1]['final_residual_j']:.1f}")
    compare_to_csv(rows, out / "compare.csv")
    for policy in policies:
        mine = [r for r in rows if r["policy"] == policy]
        mean_l3 = sum(r["l3_delivered"] for r in mine) / len(mine)
        mean_res = sum(r["final_residual_j"] for r in mine) / len(mine)
        print(f"{policy}: mean l3={mean_l3:.1f} mean residual={mean_res:.1f}")
    print(f"-> {out / 'compare.csv'}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_compare(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

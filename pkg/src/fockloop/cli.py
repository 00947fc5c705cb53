"""Command line entry points.

Exit codes: 0 success, 2 configuration problems, 3 numerical-invariant
violations, 4 I/O failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from . import harness, io
from .config import from_mapping, config_hash, parse_config_text
from .errors import ConfigError, NumericsError


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fockloop",
        description="Discrete-time measurement feedback stabilizing photon-number "
                    "states in a lossy cavity: simulator and analysis tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="key = value config file")
        sp.add_argument("--seed", type=int, metavar="U64")
        sp.add_argument("--out", default=".", metavar="DIR")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--trajectories", type=int, metavar="N")
        sp.add_argument("--cycles", type=int, metavar="N")

    common(sub.add_parser("simulate", help="run one trajectory, write its per-cycle log"))
    common(sub.add_parser("ensemble", help="run trajectories, write summary JSON and mean curves"))
    common(sub.add_parser("jumpstats", help="ensemble plus jump-aligned recovery curves"))
    sp = sub.add_parser("convergence", help="convergence-time histogram and cumulative curve")
    common(sp)
    sp.add_argument("--ntag-sweep", action="store_true",
                    help="repeat for target levels 1..5 and write a combined table")
    sp = sub.add_parser("bench", help="time the per-cycle estimator and controller")
    common(sp)
    sp.add_argument("--iterations", type=int, default=2000)
    common(sub.add_parser("validate", help="load a config, print its resolved form"))
    return p


def _load_raw(args) -> tuple[dict, set]:
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        raw, explicit = parse_config_text(text)
    else:
        raw, explicit = {}, set()
    for key in ("seed", "trajectories", "cycles"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
            explicit.add(key)
    return raw, explicit


def _out_path(args, name: str) -> str:
    io.ensure_dir(args.out)
    return os.path.join(args.out, name)


def cmd_simulate(args) -> int:
    raw, explicit = _load_raw(args)
    cfg = from_mapping(raw, explicit)
    log = harness.run_trajectory(cfg)
    if args.format == "json":
        path = _out_path(args, "trajectory.json")
        io.write_json(path, io.trajectory_json_payload(
            log, cfg.as_dict(), config_hash(cfg), __version__))
    else:
        path = _out_path(args, "trajectory.csv")
        io.write_trajectory_csv(path, log)
    conv = log.convergence_cycle if log.convergence_cycle is not None else "-"
    print(f"wrote {path}  (cycles={cfg.cycles}, final F_real={log.F_real[-1]:.4f}, "
          f"convergence_cycle={conv}, down_jumps={int(log.jump_flag.sum())})")
    return 0


def cmd_ensemble(args) -> int:
    raw, explicit = _load_raw(args)
    cfg = from_mapping(raw, explicit)
    summary = harness.run_ensemble(cfg)
    curves = harness.mean_curves(summary)
    stats = harness.convergence_stats(summary)
    latency = harness.bench_cycle(cfg, iterations=500, warmup=100)
    payload = harness.summary_payload(summary, curves=curves, stats=stats,
                                      latency=latency)
    json_path = _out_path(args, "summary.json")
    io.write_json(json_path, payload)
    written = [json_path]
    if args.format == "csv":
        csv_path = _out_path(args, "curves.csv")
        io.write_curves_csv(csv_path, curves)
        written.append(csv_path)
    print(f"wrote {', '.join(written)}  (trajectories={summary.trajectories}, "
          f"mean final F_real={summary.F_real[:, -1].mean():.4f}, "
          f"wall={summary.wall_time_s:.1f}s)")
    return 0


def cmd_jumpstats(args) -> int:
    raw, explicit = _load_raw(args)
    cfg = from_mapping(raw, explicit)
    summary = harness.run_ensemble(cfg)
    aligned = harness.jump_aligned_average(summary)
    rate = harness.down_jump_rate(summary)
    payload = harness.summary_payload(summary, aligned=aligned)
    payload["jump_rate"] = rate
    json_path = _out_path(args, "jumpstats.json")
    io.write_json(json_path, payload)
    written = [json_path]
    if args.format == "csv":
        csv_path = _out_path(args, "jump_aligned.csv")
        io.write_jump_csv(csv_path, aligned)
        written.append(csv_path)
    rec = aligned["recovery_time_s"]
    rec_txt = f"{rec * 1e3:.1f} ms" if rec is not None else "none"
    print(f"wrote {', '.join(written)}  (events={aligned['n_events']}, "
          f"plateau={aligned['plateau']:.3f}, recovery={rec_txt}, "
          f"down_rate={rate['measured_rate_hz']:.1f}/s)")
    return 0


def cmd_convergence(args) -> int:
    raw, explicit = _load_raw(args)
    if not args.ntag_sweep:
        cfg = from_mapping(raw, explicit)
        summary = harness.run_ensemble(cfg)
        stats = harness.convergence_stats(summary)
        payload = harness.summary_payload(summary, stats=stats)
        json_path = _out_path(args, "convergence.json")
        io.write_json(json_path, payload)
        written = [json_path]
        if args.format == "csv":
            csv_path = _out_path(args, "convergence.csv")
            io.write_convergence_csv(csv_path, stats)
            written.append(csv_path)
        print(f"wrote {', '.join(written)}  (converged {stats['converged']}"
              f"/{stats['trajectories']} at f_conv={stats['f_conv']})")
        return 0

    base = from_mapping(raw, explicit)
    tags = [t for t in range(1, 6) if t <= base.n_max - 1]
    per_tag = {}
    rows = []
    for tag in tags:
        mapping = dict(raw)
        mapping["n_tag"] = tag
        cfg = from_mapping(mapping, explicit | {"n_tag"})
        summary = harness.run_ensemble(cfg)
        stats = harness.convergence_stats(summary)
        per_tag[str(tag)] = {
            "config_hash": config_hash(cfg),
            "convergence": {k: (v.tolist() if hasattr(v, "tolist") else v)
                            for k, v in stats.items()},
        }
        rows.append((tag, stats))
    payload = {
        "schema": "ntag_sweep",
        "version": __version__,
        "base_config": base.as_dict(),
        "tags": per_tag,
    }
    json_path = _out_path(args, "ntag_sweep.json")
    io.write_json(json_path, payload)
    written = [json_path]
    if args.format == "csv":
        lines = [",".join(("n_tag",) + io.CONVERGENCE_COLUMNS)]
        for tag, stats in rows:
            body = io.convergence_csv_text(stats).splitlines()[1:]
            lines.extend(f"{tag},{line}" for line in body)
        csv_path = _out_path(args, "ntag_sweep.csv")
        io.write_text(csv_path, "\n".join(lines) + "\n")
        written.append(csv_path)
    print(f"wrote {', '.join(written)}  (tags {tags[0]}..{tags[-1]})")
    return 0


def cmd_bench(args) -> int:
    raw, explicit = _load_raw(args)
    cfg = from_mapping(raw, explicit)
    res = harness.bench_cycle(cfg, iterations=args.iterations)
    path = _out_path(args, "bench.json")
    io.write_json(path, res)
    print(f"wrote {path}  (median {res['median_us']:.1f} us, p99 {res['p99_us']:.1f} us, "
          f"budget {res['budget_us']:.0f} us, ops ~{res['op_estimate']})")
    return 0


def cmd_validate(args) -> int:
    raw, explicit = _load_raw(args)
    cfg = from_mapping(raw, explicit)
    print(json.dumps({"config": cfg.as_dict(), "config_hash": config_hash(cfg)},
                     indent=2))
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "jumpstats": cmd_jumpstats,
    "convergence": cmd_convergence,
    "bench": cmd_bench,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

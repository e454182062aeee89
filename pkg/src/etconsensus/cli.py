"""Command-line front end.

    etconsensus run      --config paper_sec5 --out runs/golden [--mode event|nominal|twin]
    etconsensus sweep    --config paper_sec5 --out runs/sweep [--set 0.001,0.001,0.01 --set ...]
    etconsensus validate --config my_scenario.yaml
    etconsensus lemmas   [--config paper_sec5] [--seed 0]

``--config`` takes a YAML file path or the name of a bundled scenario.
"""
import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import checks
from .config import applied_defaults, config_hash, dump_config, parse_config, read_config_text
from .engine import compare_thresholds, run
from .errors import DivergedError, EtcError
from .io import ensure_dir, write_comparison, write_events, write_trajectories

MODE_FLAGS = {"nominal": "nominal", "event": "event_triggered", "twin": "twin"}
DEFAULT_SETS = [(0.001, 0.001, 0.01), (0.002, 0.005, 0.05)]


@dataclass
class RunManifest:
    config_path: str
    out_dir: Path
    command: str = "run"
    mode: str = None
    dt: float = None
    t_end: float = None
    seed: int = 0
    threshold_sets: list = field(default_factory=list)
    config_hash: str = None


def resolve_config(manifest):
    text = read_config_text(manifest.config_path)
    cfg = parse_config(text)
    sim = {}
    if manifest.mode is not None:
        sim["mode"] = manifest.mode
    if manifest.dt is not None:
        sim["dt"] = manifest.dt
    if manifest.t_end is not None:
        sim["t_end"] = manifest.t_end
    if sim:
        cfg = cfg.with_overrides(sim=sim)
    manifest.config_hash = config_hash(cfg)
    return cfg, applied_defaults(text)


def _fmt_metrics(m):
    lines = [
        f"tail window [{m['tail_window'][0]:g}, {m['tail_window'][1]:g}] s: max |e_i| = {m['tail_max_abs_e']:.6g}",
        f"max |e_i| over [0, 1] s = {m['early_max_abs_e']:.6g}",
        f"max |x_k| per level = {[round(v, 6) for v in m['max_abs_x']]}",
        f"max |u_i| = {m['max_abs_u']:.6g}",
        f"max weight norm per level = {[float(f'{v:.6g}') for v in m['max_weight_norm']]}",
    ]
    if "event_counts" in m:
        lines.append(f"event counts by kind = {m['event_counts']}")
        lines.append(f"event counts by level = {m['event_counts_by_level']}")
        lines.append(f"min inter-event gap by kind = { {k: float(f'{v:.6g}') for k, v in m['min_gap'].items()} }")
    if "twin_gap_x" in m:
        lines.append(f"twin sup-norm gap: x {m['twin_gap_x']:.3e}, u {m['twin_gap_u']:.3e}")
    return lines


def _zeno_lines(m):
    out = ["agent kind     level count  min_gap      certificate  flagged"]
    for z in m.get("zeno", []):
        out.append(f"{z['agent'] + 1:5d} {z['kind']:8s} {z['level']:5d} {z['count']:6d} "
                   f"{z['min_gap']:.6e} {z['certificate']:.6e} {z['flagged']}")
    return out


def run_command(manifest, stream=None):
    """Execute the manifest's experiment; returns a process exit status."""
    stream = stream or sys.stdout
    try:
        cfg, defaults = resolve_config(manifest)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EtcError as exc:
        print(f"error: invalid config {manifest.config_path}: {exc}", file=sys.stderr)
        return 2

    if manifest.command == "validate":
        print(f"config {manifest.config_path} is valid (hash {manifest.config_hash})", file=stream)
        if defaults:
            print("defaults applied: " + ", ".join(defaults), file=stream)
        for c in checks.assumption_checks(cfg):
            print(c.line(), file=stream)
        print("--- resolved config ---", file=stream)
        print(dump_config(cfg), file=stream, end="")
        return 0

    if manifest.command == "lemmas":
        return _lemmas(cfg, manifest.seed, stream)

    out = ensure_dir(manifest.out_dir)
    (out / "resolved_config.yaml").write_text(f"# config hash {manifest.config_hash}\n" + dump_config(cfg))

    if manifest.command == "sweep":
        sets = manifest.threshold_sets or DEFAULT_SETS
        try:
            rows = compare_thresholds(cfg, sets)
        except DivergedError as exc:
            print(f"error: run diverged: {exc}", file=sys.stderr)
            return 1
        write_comparison(out / "comparison.csv", rows)
        for i, row in enumerate(rows, 1):
            print(f"set {i} (dx={row['dx_self']:g}, dxj={row['dx_neighbor']:g}, du={row['du']:g}): "
                  f"events {row['event_counts']}, tail max |e| {row['tail_max_abs_e']:.6g}", file=stream)
        return 0

    t0 = time.perf_counter()
    try:
        result = run(cfg, record_weights=cfg.sim.mode != "nominal")
    except DivergedError as exc:
        where = f" at t={exc.t:.6g}" if exc.t is not None else ""
        print(f"error: run diverged{where}: {exc}", file=sys.stderr)
        return 1
    elapsed = time.perf_counter() - t0

    write_trajectories(out / "trajectories.csv", result)
    write_events(out / "events.csv", result.channels)
    if result.nominal is not None:
        write_trajectories(out / "trajectories_nominal.csv", result.nominal)

    header = [f"config: {manifest.config_path}", f"config hash: {manifest.config_hash}",
              f"mode: {cfg.sim.mode}", f"steps: {result.n_steps} (dt={cfg.sim.dt:g}, t_end={cfg.sim.t_end:g})",
              f"wall time: {elapsed:.2f} s"]
    if defaults:
        header.append("defaults applied: " + ", ".join(defaults))
    metric_lines = _fmt_metrics(result.metrics)
    lines = header + ["", "== metrics =="] + metric_lines
    check_list = checks.run_invariant_checks(result, cfg) + checks.assumption_checks(cfg, result)
    if result.channels and result.weights is not None:
        check_list.append(checks.lemma3_suite(result, cfg)[0])
    lines += ["", "== invariant checks =="] + [c.line() for c in check_list]
    if result.channels:
        lines += ["", "== Zeno certificates (threshold / observed max signal rate) =="] + _zeno_lines(result.metrics)
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    (out / "metrics.json").write_text(json.dumps(_jsonable(result.metrics), indent=2, sort_keys=True))
    print("\n".join(header + metric_lines), file=stream)
    failed = [c.name for c in check_list if not c.passed]
    if failed:
        print("checks not passed: " + "; ".join(failed), file=stream)
    print(f"wrote {out}/trajectories.csv, events.csv, summary.txt, resolved_config.yaml", file=stream)
    return 0


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _lemmas(cfg, seed, stream):
    results = [
        checks.lemma1_suite(seed),
        checks.lemma2_suite(seed),
        checks.lemma2_suite(seed, input_dim=3),
        checks.projection_suite(seed),
    ]
    lcfg = cfg.with_overrides(sim={"mode": "event_triggered"})
    try:
        res = run(lcfg, record_weights=True)
    except DivergedError as exc:
        print(f"error: run diverged: {exc}", file=sys.stderr)
        return 1
    results.append(checks.lemma3_suite(res, lcfg)[0])
    for r in results:
        print(r.line(), file=stream)
    return 0 if all(r.passed for r in results) else 1


def _threshold_set(text):
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}") from None
    if len(vals) != 3 or min(vals) <= 0:
        raise argparse.ArgumentTypeError("a threshold set is dx_self,dx_neighbor,du with positive entries")
    return vals


def build_parser():
    parser = argparse.ArgumentParser(prog="etconsensus", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out):
        p.add_argument("--config", default="paper_sec5", help="YAML scenario path or bundled scenario name")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--mode", choices=sorted(MODE_FLAGS), help="override sim.mode")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized property suites")
        p.add_argument("--dt", type=float, help="override sim.dt")
        p.add_argument("--t-end", type=float, dest="t_end", help="override sim.t_end")

    common(sub.add_parser("run", help="simulate one scenario and export CSVs"), True)
    sp = sub.add_parser("sweep", help="compare triggering threshold sets")
    common(sp, True)
    sp.add_argument("--set", dest="sets", action="append", type=_threshold_set,
                    help="threshold set dx_self,dx_neighbor,du (repeatable; default: the two reference sets)")
    common(sub.add_parser("validate", help="check a config and print the resolved form"), False)
    common(sub.add_parser("lemmas", help="run the Laplacian, basis-shift, projection and deviation suites"), False)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    manifest = RunManifest(
        config_path=args.config,
        out_dir=Path(getattr(args, "out", None) or "."),
        command=args.command,
        mode=MODE_FLAGS[args.mode] if args.mode else None,
        dt=args.dt,
        t_end=args.t_end,
        seed=args.seed,
        threshold_sets=getattr(args, "sets", None) or [],
    )
    return run_command(manifest)


if __name__ == "__main__":
    sys.exit(main())

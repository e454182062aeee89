"""Compare event counts and tail consensus residual across threshold sets.

Each set is dx_self,dx_neighbor,du. Without --set, the two reference sets
plus a coarser third one are compared.

    python scripts/threshold_sweep.py --out runs/sweep
    python scripts/threshold_sweep.py --set 0.001,0.001,0.01 --set 0.004,0.01,0.1
"""
import argparse
from pathlib import Path

from etconsensus import compare_thresholds, load_config
from etconsensus.io import ensure_dir, write_comparison

DEFAULT = [(0.001, 0.001, 0.01), (0.002, 0.005, 0.05), (0.004, 0.01, 0.1)]


def parse_set(text):
    vals = tuple(float(v) for v in text.split(","))
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("need dx_self,dx_neighbor,du")
    return vals


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="paper_sec5")
    ap.add_argument("--out", default="runs/sweep")
    ap.add_argument("--set", dest="sets", action="append", type=parse_set)
    ap.add_argument("--t-end", type=float, default=None)
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.t_end is not None:
        cfg = cfg.with_overrides(sim={"t_end": args.t_end})
    rows = compare_thresholds(cfg, args.sets or DEFAULT)

    print(f"{'dx_self':>8} {'dx_nbr':>8} {'du':>8} {'state':>7} {'neighbor':>9} {'input':>7} {'tail|e|':>10}")
    for r in rows:
        c = r["event_counts"]
        print(f"{r['dx_self']:8g} {r['dx_neighbor']:8g} {r['du']:8g} {c['state']:7d} {c['neighbor']:9d} "
              f"{c['input']:7d} {r['tail_max_abs_e']:10.4g}")
    out = ensure_dir(args.out)
    write_comparison(Path(out) / "comparison.csv", rows)
    print(f"wrote {out}/comparison.csv")


if __name__ == "__main__":
    main()

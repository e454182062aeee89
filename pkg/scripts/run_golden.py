"""Run the bundled reference scenario and print its metrics and checks.

    python scripts/run_golden.py [--out runs/golden] [--t-end 20]
"""
import argparse
import sys
from pathlib import Path

from etconsensus.cli import RunManifest, run_command


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/golden")
    ap.add_argument("--t-end", type=float, default=None)
    ap.add_argument("--mode", choices=["nominal", "event_triggered", "twin"], default=None)
    args = ap.parse_args()
    manifest = RunManifest(config_path="paper_sec5", out_dir=Path(args.out), mode=args.mode, t_end=args.t_end)
    code = run_command(manifest)
    if code == 0:
        print(f"full check list and Zeno table in {args.out}/summary.txt")
    return code


if __name__ == "__main__":
    sys.exit(main())

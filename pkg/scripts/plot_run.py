"""Plot states, inputs, consensus errors and event instants from a run directory.

    python scripts/plot_run.py runs/golden        # writes runs/golden/overview.png

Needs matplotlib (``pip install matplotlib``); not used by the package itself.
"""
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from etconsensus.io import read_events, read_trajectories  # noqa: E402


def main(run_dir):
    run_dir = Path(run_dir)
    tr = read_trajectories(run_dir / "trajectories.csv")
    events = read_events(run_dir / "events.csv")
    t = tr["t"]
    fig, ax = plt.subplots(5, 1, figsize=(9, 12), sharex=True)
    for i in range(tr["x"].shape[1]):
        ax[0].plot(t, tr["x"][:, i, 0], label=f"agent {i + 1}")
        ax[1].plot(t, tr["x"][:, i, 1])
        ax[2].plot(t, tr["u"][:, i])
        ax[3].plot(t, tr["e"][:, i])
    for label, a in zip(("x1", "x2", "u", "e"), ax):
        a.set_ylabel(label)
    ax[0].legend(loc="upper right", fontsize=8)
    for kind, y in (("state", 0), ("neighbor", 1), ("input", 2)):
        pts = [(ev["t"], y + 0.2 * (ev["agent"] - 2.5) / 2) for ev in events if ev["kind"] == kind]
        if pts:
            ts, ys = zip(*pts)
            ax[4].scatter(ts, ys, s=1)
    ax[4].set_yticks([0, 1, 2], ["state", "neighbor", "input"])
    ax[4].set_xlabel("t [s]")
    fig.tight_layout()
    out = run_dir / "overview.png"
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "runs/golden")

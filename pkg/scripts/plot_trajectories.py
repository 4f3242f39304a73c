#!/usr/bin/env python3
"""Plot track coordinates against time from a tracks.csv file.

    python3 scripts/plot_trajectories.py demo_out/tracks.csv -o traj.png

Each track id gets one color; the three panels show x, y and range
against the step index, so identity swaps and coasting gaps stand out
immediately.
"""
import argparse
import csv
from collections import defaultdict


def load(path):
    by_id = defaultdict(lambda: ([], [], [], []))
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            steps, xs, ys, zs = by_id[int(row["track_id"])]
            steps.append(int(row["step"]))
            xs.append(float(row["centroid_x"]))
            ys.append(float(row["centroid_y"]))
            zs.append(float(row["centroid_z"]))
    return by_id


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("tracks_csv")
    ap.add_argument("-o", "--out", default="trajectories.png")
    ap.add_argument(
        "--min-steps", type=int, default=1, help="hide tracks shorter than this"
    )
    args = ap.parse_args()

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        raise SystemExit("matplotlib is required for plotting: pip install matplotlib")

    by_id = load(args.tracks_csv)
    fig, axes = plt.subplots(3, 1, figsize=(9, 9), sharex=True)
    labels = ("x [px]", "y [px]", "range [bins]")
    for tid in sorted(by_id):
        steps, *coords = by_id[tid]
        if len(steps) < args.min_steps:
            continue
        for ax, series in zip(axes, coords):
            ax.plot(steps, series, marker=".", markersize=3, label=f"track {tid}")
    for ax, lab in zip(axes, labels):
        ax.set_ylabel(lab)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel("step (frame group)")
    axes[0].legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=130)
    print(f"wrote {args.out} ({len(by_id)} tracks)")


if __name__ == "__main__":
    main()

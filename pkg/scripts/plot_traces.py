#!/usr/bin/env python3
"""Plot trace CSVs written by `blotto2 learn --trace` / `blotto2 ascend --trace`.

The file kind is sniffed from the header row: learning traces carry a "gap"
column, ascent traces a "V" column. One PNG per input file.

Usage:
    python3 scripts/plot_traces.py trace.csv
    python3 scripts/plot_traces.py run1.csv run2.csv --out-dir plots/
"""

import argparse
import csv
import os
import sys


def read_trace(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {name: [] for name in header}
    for row in body:
        for name, cell in zip(header, row):
            cols[name].append(float(cell) if cell else None)
    return cols


def plot_learn(cols, path, out):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = cols["t"]
    fig, (ax_gap, ax_val) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    ax_gap.semilogy(t, cols["gap"], marker=".", lw=1)
    ax_gap.set_ylabel("saddle point gap")
    ax_gap.grid(True, which="both", alpha=0.3)
    ax_val.plot(t, cols["value"], marker=".", lw=1, color="tab:orange")
    ax_val.set_ylabel("averaged-profile value")
    ax_val.set_xlabel("iteration")
    ax_val.grid(True, alpha=0.3)
    reg1 = [v for v in cols.get("avg_regret1", []) if v is not None]
    if reg1:
        ax_r = ax_gap.twinx()
        tr = [ti for ti, v in zip(t, cols["avg_regret1"]) if v is not None]
        ax_r.plot(tr, reg1, lw=1, color="tab:green", alpha=0.6)
        r2 = [v for v in cols["avg_regret2"] if v is not None]
        ax_r.plot(tr, r2, lw=1, color="tab:red", alpha=0.6)
        ax_r.set_ylabel("avg regret (green=1, red=2)")
    fig.suptitle(os.path.basename(path))
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def plot_ascend(cols, path, out):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = cols["t"]
    fig, (ax_v, ax_eta) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    ax_v.plot(t, cols["V"], lw=1)
    ax_v.set_ylabel("objective V")
    ax_v.grid(True, alpha=0.3)
    ax_eta.semilogy(t, cols["eta"], lw=1, color="tab:orange")
    ax_eta.set_ylabel("step size")
    ax_eta.set_xlabel("iteration")
    ax_eta.grid(True, which="both", alpha=0.3)
    fig.suptitle(os.path.basename(path))
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("traces", nargs="+", help="trace CSV files")
    ap.add_argument("--out-dir", default=".", help="where PNGs land")
    args = ap.parse_args()

    os.makedirs(args.out_dir, exist_ok=True)
    for path in args.traces:
        cols = read_trace(path)
        stem = os.path.splitext(os.path.basename(path))[0]
        out = os.path.join(args.out_dir, stem + ".png")
        if "gap" in cols:
            plot_learn(cols, path, out)
        elif "V" in cols:
            plot_ascend(cols, path, out)
        else:
            sys.exit(f"{path}: header matches neither trace format")
        print(f"{path} -> {out}")


if __name__ == "__main__":
    main()

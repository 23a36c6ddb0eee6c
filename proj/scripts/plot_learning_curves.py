#!/usr/bin/env python3
"""Plot validation error against update index for featreg history CSVs.

usage: plot_learning_curves.py OUT.png history.csv [history.csv ...]
       plot_learning_curves.py OUT.png COMPARE_DIR
"""
import argparse
import csv
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_history(path):
    updates, loss, error = [], [], []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            updates.append(int(row["update_index"]))
            loss.append(float(row["train_loss"]))
            error.append(float(row["validation_error"]))
    return updates, loss, error


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("output")
    parser.add_argument("inputs", nargs="+")
    args = parser.parse_args()

    files = []
    for item in map(pathlib.Path, args.inputs):
        if item.is_dir():
            files.extend(sorted((item / "curves").glob("*.csv")) or sorted(item.glob("history.csv")))
        else:
            files.append(item)
    if not files:
        parser.error("no history files found")

    fig, (ax_err, ax_loss) = plt.subplots(1, 2, figsize=(11, 4))
    for path in files:
        updates, loss, error = read_history(path)
        ax_err.plot(updates, error, label=path.stem, linewidth=1)
        ax_loss.plot(updates, loss, label=path.stem, linewidth=1)
    ax_err.set_xlabel("update")
    ax_err.set_ylabel("validation error (%)")
    ax_loss.set_xlabel("update")
    ax_loss.set_ylabel("training cross-entropy per instance")
    ax_loss.set_yscale("log")
    ax_err.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Writes the bundled miniature corpus in data/mini.

200 documents over three classes. The vocabulary is made of synonym groups
whose 10-dimensional side-information vectors sit close together, a few
generic words, and a handful of rare words removed by min_count = 1.
"""
import argparse
import pathlib

import numpy as np


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "mini"))
    ap.add_argument("--seed", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    groups, per_group, dim = 12, 3, 10
    classes = ["sport", "science", "politics"]
    vocab, vectors, group_of = [], [], []
    for g in range(groups):
        centre = 3.0 * rng.standard_normal(dim)
        for s in range(per_group):
            vocab.append(f"g{g}w{s}")
            vectors.append(centre + 0.3 * rng.standard_normal(dim))
            group_of.append(g)
    for k in range(8):
        vocab.append(f"common{k}")
        vectors.append(3.0 * rng.standard_normal(dim))
        group_of.append(-1)
    rare_start = len(vocab)
    for k in range(4):
        vocab.append(f"rare{k}")
        vectors.append(3.0 * rng.standard_normal(dim))
        group_of.append(-2)

    # Each class draws mostly from four groups; groups overlap a little.
    class_groups = [[0, 1, 2, 3, 9], [4, 5, 6, 7, 10], [8, 9, 10, 11, 3]]
    words_in_group = {g: [i for i, h in enumerate(group_of) if h == g] for g in range(groups)}
    common = [i for i, h in enumerate(group_of) if h == -1]

    lines = []
    rare_left = list(range(rare_start, len(vocab)))
    for doc in range(200):
        label = doc % 3
        counts = {}
        for _ in range(rng.integers(5, 12)):
            if rng.random() < 0.7:
                g = class_groups[label][rng.integers(len(class_groups[label]))]
            else:
                g = rng.integers(groups)
            w = words_in_group[g][rng.integers(per_group)]
            counts[w] = counts.get(w, 0) + 1
        for _ in range(rng.integers(1, 4)):
            w = common[rng.integers(len(common))]
            counts[w] = counts.get(w, 0) + 1
        if rare_left and doc % 50 == 7:
            w = rare_left.pop()
            counts[w] = 1
        body = " ".join(f"{w + 1}:{c}" for w, c in sorted(counts.items()))
        lines.append(f"{label + 1} {body}")
    order = rng.permutation(len(lines))
    (out / "mini.bow").write_text("".join(lines[i] + "\n" for i in order))
    (out / "vocab.txt").write_text("".join(w + "\n" for w in vocab))
    header = f"# {len(vocab)} {dim}\n"
    (out / "side_info.txt").write_text(header + "".join(" ".join(f"{v:.6f}" for v in vec) + "\n" for vec in vectors))
    (out / "labels.txt").write_text("".join(f"{k + 1}\t{name}\n" for k, name in enumerate(classes)))
    (out / "stop_words.txt").write_text("# words removed before training\ncommon0 common1\n")


if __name__ == "__main__":
    main()

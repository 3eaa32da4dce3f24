#!/usr/bin/env python3
"""Generate a synthetic planted-community dataset in the text layout the
package ingests (manifest.txt, graph.txt, features.txt, labels.txt, and
optionally standard_split.txt).

Nodes are assigned classes round-robin, features are noisy class centroids,
and edges prefer same-class endpoints, so graph structure and features both
carry label signal. Useful for end-to-end runs when the citation benchmarks
are not on disk.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np


def build(args):
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 2026]))
    n, m, d = args.nodes, args.classes, args.features

    labels = np.arange(n) % m
    rng.shuffle(labels)

    centroids = rng.normal(scale=2.0, size=(m, d))
    features = centroids[labels] + rng.normal(scale=args.noise, size=(n, d))
    # Sparsify so the triplet file stays small and loaders see real sparsity.
    keep = rng.random((n, d)) < args.density
    features = np.where(keep, features, 0.0)

    target_edges = n * args.edges_per_node // 2
    by_class = [np.flatnonzero(labels == c) for c in range(m)]
    edges = set()
    attempts = 0
    while len(edges) < target_edges and attempts < 50 * target_edges:
        attempts += 1
        if rng.random() < args.intra:
            members = by_class[int(rng.integers(m))]
            if members.size < 2:
                continue
            u, v = rng.choice(members, size=2, replace=False)
        else:
            u, v = rng.integers(n, size=2)
        if u == v:
            continue
        edges.add((int(min(u, v)), int(max(u, v))))

    return labels, features, sorted(edges)


def write_dataset(out: Path, args, labels, features, edges) -> None:
    out.mkdir(parents=True, exist_ok=True)
    n, d = features.shape
    (out / "manifest.txt").write_text(
        f"nodes {n}\nfeatures {d}\nclasses {args.classes}\n", encoding="utf-8"
    )
    (out / "graph.txt").write_text(
        "".join(f"{u} {v}\n" for u, v in edges), encoding="utf-8"
    )
    rows, cols = np.nonzero(features)
    (out / "features.txt").write_text(
        "".join(f"{r} {c} {features[r, c]:.6g}\n" for r, c in zip(rows, cols)),
        encoding="utf-8",
    )
    (out / "labels.txt").write_text(
        "".join(f"{i} {int(c)}\n" for i, c in enumerate(labels)), encoding="utf-8"
    )


def write_standard_split(out: Path, args, labels) -> None:
    n = labels.shape[0]
    needed = 20 * args.classes + args.val + args.test
    if n < needed:
        raise SystemExit(
            f"--standard-split needs at least {needed} nodes "
            f"(20 per class + {args.val} val + {args.test} test), have {n}"
        )
    rng = np.random.default_rng(np.random.SeedSequence([args.seed, 2027]))
    train: list[int] = []
    for c in range(args.classes):
        members = np.flatnonzero(labels == c)
        train.extend(int(i) for i in rng.permutation(members)[:20])
    rest = rng.permutation(np.array(sorted(set(range(n)) - set(train))))
    val = sorted(int(i) for i in rest[: args.val])
    test = sorted(int(i) for i in rest[args.val : args.val + args.test])
    lines = ["train:"] + [str(i) for i in sorted(train)]
    lines += ["val:"] + [str(i) for i in val]
    lines += ["test:"] + [str(i) for i in test]
    (out / "standard_split.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="dataset directory to create")
    parser.add_argument("--nodes", type=int, default=1700)
    parser.add_argument("--classes", type=int, default=4)
    parser.add_argument("--features", type=int, default=64)
    parser.add_argument("--edges-per-node", type=int, default=4)
    parser.add_argument("--intra", type=float, default=0.85,
                        help="fraction of edges drawn within a class")
    parser.add_argument("--noise", type=float, default=1.0)
    parser.add_argument("--density", type=float, default=0.3,
                        help="fraction of feature entries kept nonzero")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--standard-split", action="store_true",
                        help="also write standard_split.txt (20/class train)")
    parser.add_argument("--val", type=int, default=500)
    parser.add_argument("--test", type=int, default=1000)
    args = parser.parse_args(argv)

    labels, features, edges = build(args)
    out = Path(args.out)
    write_dataset(out, args, labels, features, edges)
    if args.standard_split:
        write_standard_split(out, args, labels)
    print(
        f"wrote {out}: {args.nodes} nodes, {len(edges)} edges, "
        f"{args.features} features, {args.classes} classes"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

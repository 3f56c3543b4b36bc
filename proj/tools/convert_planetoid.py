#!/usr/bin/env python3
"""Convert Planetoid-style raw citation files into the graph text format.

Input is the classic pair of files (e.g. cora.content / cora.cites):

  <content>: one line per paper:  <id> <f_1> ... <f_d> <label-name>
  <cites>:   one line per link:   <cited-id> <citing-id>

Output format (see README): header "N d C", N node lines
"label f_1 ... f_d", an EDGES sentinel, then one "u v" pair per line.
Links are symmetrized and de-duplicated; self-loops and links to unknown
ids are dropped (counts reported on stderr).
"""

import argparse
import sys


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("content", help="node file (id, features, label name)")
    parser.add_argument("cites", help="edge file (pairs of node ids)")
    parser.add_argument("output", help="path of the converted graph file")
    args = parser.parse_args()

    node_ids = {}
    features = []
    label_names = []
    with open(args.content) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) < 3:
                continue
            node_ids[parts[0]] = len(node_ids)
            features.append(parts[1:-1])
            label_names.append(parts[-1])

    classes = {name: i for i, name in enumerate(sorted(set(label_names)))}
    labels = [classes[name] for name in label_names]

    edges = set()
    dropped_unknown = 0
    dropped_self = 0
    with open(args.cites) as fh:
        for line in fh:
            parts = line.split()
            if len(parts) != 2:
                continue
            if parts[0] not in node_ids or parts[1] not in node_ids:
                dropped_unknown += 1
                continue
            u, v = node_ids[parts[0]], node_ids[parts[1]]
            if u == v:
                dropped_self += 1
                continue
            edges.add((min(u, v), max(u, v)))

    n = len(features)
    d = len(features[0]) if features else 0
    with open(args.output, "w") as out:
        out.write(f"{n} {d} {len(classes)}\n")
        for label, feats in zip(labels, features):
            out.write(f"{label} " + " ".join(feats) + "\n")
        out.write("EDGES\n")
        for u, v in sorted(edges):
            out.write(f"{u} {v}\n")

    print(
        f"wrote {args.output}: {n} nodes, {len(edges)} edges, "
        f"{len(classes)} classes, {d} features "
        f"(dropped {dropped_unknown} unknown-id links, {dropped_self} self-loops)",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

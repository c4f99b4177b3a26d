"""Monte-Carlo spread of P_attr and P_assoc for an attacker that ignores the labels.

Used to pick the tolerance bands of the independent-attacker acceptance test.

    python benchmarks/mc_prestudy.py [--seeds 500] [--rows 10000]
"""

import argparse

import numpy as np

from sbls.attribute import attribute_excess, p_attr
from sbls.auc import align_permutation
from sbls.linkage import confusion_matrix, hard_predictions, mutual_information, p_assoc
from sbls.synth import SynthSpec, synthesize


def one(seed, rows, k):
    spec = SynthSpec.from_json({"seed": seed, "n_rows": rows, "attributes": [
        {"name": "a", "k": k, "linkage": "independent"}]})
    _, tables, labels = synthesize(spec)
    y = np.array([int(v[1:]) for v in labels.column("a")])
    al = align_permutation(tables[0].scores, y)
    cm = confusion_matrix(y, hard_predictions(tables[0].scores, al), k)
    return p_attr([attribute_excess(al)]), p_assoc([mutual_information(cm)])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=500)
    parser.add_argument("--rows", type=int, default=10_000)
    parser.add_argument("--k", type=int, default=2)
    args = parser.parse_args()
    res = np.array([one(1000 + s, args.rows, args.k) for s in range(args.seeds)])
    for name, col in (("P_attr", res[:, 0]), ("P_assoc", res[:, 1])):
        q = np.quantile(col, [0.0, 0.001, 0.01, 0.5])
        print(f"{name:8} min={q[0]:.5f} q0.1%={q[1]:.5f} q1%={q[2]:.5f} "
              f"median={q[3]:.5f} mean={col.mean():.5f}")


if __name__ == "__main__":
    main()

"""KL(exact predictive || MAP predictive) as each observation set is replicated m times.

The MAP estimate does not move under replication, while the posterior
concentrates around it, so the divergence should shrink with m.

    python3 scripts/kl_vs_multiplicity.py [--bases 10] [--seed 0] [--csv out.csv]
"""

import argparse
import csv
import sys

import numpy as np

from boojum.core import ObservationSet, from_pseudo_observations
from boojum.oracle import kl_exact_vs_map
from boojum.scenarios import canonical

MULTIPLICITIES = (1, 2, 5, 10, 20)


def random_base(rng, n):
    obs = np.clip(rng.dirichlet([1.0, 1.0], size=n), 1e-6, None)
    return ObservationSet(obs / obs.sum(axis=1, keepdims=True))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--bases", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--csv", help="also write the table here")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    bases = [("S1", canonical("S1")), ("S3", canonical("S3"))]
    bases += [(f"random{i}", random_base(rng, int(rng.integers(2, 6)))) for i in range(args.bases)]

    header = ["base", "n"] + [f"m={m}" for m in MULTIPLICITIES] + ["monotone"]
    rows = []
    for name, base in bases:
        kl = [kl_exact_vs_map(from_pseudo_observations(base.replicate(m))) for m in MULTIPLICITIES]
        monotone = all(b <= a for a, b in zip(kl, kl[1:]))
        rows.append([name, len(base)] + [f"{v:.4e}" for v in kl] + [monotone])
        print("  ".join(str(c) for c in rows[-1]), flush=True)

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    sys.exit(0 if all(r[-1] for r in rows) else 1)


if __name__ == "__main__":
    main()

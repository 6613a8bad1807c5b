#!/usr/bin/env python3
"""Generate the synthetic evaluation benchmark into a directory.

The output root contains articles/, annotations.csv, entities.tsv, kg.nt,
stoplist.txt, and embeddings.csv, and is a drop-in input for the sedrec
score/evaluate commands. Generation is a pure function of the seed.
"""

import argparse

from sedrec.synthetic import DEFAULT_SEED, generate_benchmark


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="directory to create")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = parser.parse_args()
    summary = generate_benchmark(args.out, seed=args.seed)
    for key, value in summary.items():
        print(f"{key}: {value}")


if __name__ == "__main__":
    main()

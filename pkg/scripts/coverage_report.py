"""Print AST node-kind counts for a generated corpus in each dialect, then the
size ratio distribution of the compiled queries."""

import argparse
from collections import Counter

from colsem.harness import GeneratorConfig, check_linear_size, gen_corpus, node_kinds, size_ratio
from colsem.sql import CS, THREE_VL


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--queries", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cfg = GeneratorConfig(seed=args.seed)

    corpora = {d: gen_corpus(cfg, args.queries, d) for d in (CS, THREE_VL)}
    counts = {d: node_kinds(q for _, q in c) for d, c in corpora.items()}
    kinds = sorted(set().union(*counts.values()))
    print(f"{'node kind':<14}{CS:>8}{THREE_VL:>8}")
    for k in kinds:
        print(f"{k:<14}{counts[CS][k]:>8}{counts[THREE_VL][k]:>8}")

    report = check_linear_size(corpora[CS])
    buckets = Counter()
    for db, q in corpora[CS]:
        for simulate in (False, True):
            source, compiled = size_ratio(q, db, simulate)
            buckets[round(compiled / source, 1)] += 1
    print(f"\n{report.queries} compilations, max ratio {report.max_ratio:.3f}, ok={report.ok}")
    for ratio in sorted(buckets):
        print(f"  ratio ~{ratio:.1f}: {buckets[ratio]}")


if __name__ == "__main__":
    main()

"""Walkthrough: the evaluation harness on a synthetic benchmark.

Twenty synthetic bug reports rank a 15-file universe; the harness
computes Acc@N, MRR, and MAP per query and aggregates them into the
result-table layout.

Run:  python demos/evaluate_metrics.py
"""
from __future__ import annotations

import random

from bugloc import BugReport, evaluate, format_table


def main() -> None:
    rng = random.Random(7)
    files = [f"src/file{i:02d}.py" for i in range(15)]

    queries, rankings = [], {}
    for i in range(20):
        ranked = files[:]
        rng.shuffle(ranked)
        relevant = frozenset(rng.sample(files, rng.randint(1, 3)))
        queries.append(
            BugReport(bug_id=f"bug-{i:02d}", title=f"bug {i}", body="", ground_truth_files=relevant)
        )
        rankings[f"bug-{i:02d}"] = ranked

    # a deliberately bad baseline: same shuffles, reversed
    k_list = (1, 3, 5, 10)
    rows = {
        "random": evaluate(queries, lambda r: rankings[r.bug_id], k_list),
        "reversed": evaluate(queries, lambda r: rankings[r.bug_id][::-1], k_list),
    }
    print(format_table(rows, k_list))

    report = rows["random"]
    worst = min(report.per_query.values(), key=lambda q: q.average_precision)
    print(f"hardest query: {worst.bug_id} "
          f"(first relevant at rank {worst.first_relevant_rank}, AP={worst.average_precision:.3f})")


if __name__ == "__main__":
    main()

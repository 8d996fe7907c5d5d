"""Accuracy@N, MRR, MAP, and the file-level evaluation loop."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence


def accuracy_at_k(ranked: Sequence[str], relevant: set[str], k: int) -> int:
    """1 iff any of the first k ranked files is relevant."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    return int(any(item in relevant for item in ranked[:k]))


def reciprocal_rank(ranked: Sequence[str], relevant: set[str]) -> float:
    """1/rank of the first relevant file; 0.0 if none is retrieved."""
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    for position, item in enumerate(ranked, start=1):
        if item in relevant:
            return 1.0 / position
    return 0.0


def average_precision(ranked: Sequence[str], relevant: set[str]) -> float:
    """Mean precision-at-rank over retrieved relevant items, over |relevant|.

    Relevant items missing from the ranked list contribute zero; the full
    ranked list is scanned (no cutoff).
    """
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    hits = 0
    precision_sum = 0.0
    for position, item in enumerate(ranked, start=1):
        if item in relevant:
            hits += 1
            precision_sum += hits / position
    return precision_sum / len(relevant)


@dataclass(frozen=True)
class QueryEval:
    bug_id: str
    first_relevant_rank: int | None
    average_precision: float
    hits_at: dict[int, int]


@dataclass
class EvalReport:
    per_query: dict[str, QueryEval]
    acc: dict[int, float]
    mrr: float
    map: float
    queries: int
    skipped: int

    def to_json(self) -> dict:
        return {
            "aggregates": {
                **{f"acc@{k}": self.acc[k] for k in sorted(self.acc)},
                "mrr": self.mrr,
                "map": self.map,
            },
            "counts": {"queries": self.queries, "skipped": self.skipped},
            "per_query": {
                bug_id: {
                    "first_relevant_rank": q.first_relevant_rank,
                    "average_precision": q.average_precision,
                    "hits_at": {str(k): v for k, v in sorted(q.hits_at.items())},
                }
                for bug_id, q in sorted(self.per_query.items())
            },
        }


def evaluate(
    queries: Iterable,
    rank_fn: Callable[[object], Sequence[str]],
    k_list: Sequence[int] = (1, 3, 5, 10),
) -> EvalReport:
    """Run ``rank_fn`` over bug reports and aggregate the metrics.

    Queries with empty ground truth are skipped (and counted), not scored
    as zero. Aggregates are unweighted means over the scored queries.
    """
    k_list = sorted(set(k_list))
    if not k_list or k_list[0] < 1:
        raise ValueError("k_list must contain integers >= 1")
    per_query: dict[str, QueryEval] = {}
    skipped = 0
    for report in queries:
        relevant = set(report.ground_truth_files)
        if not relevant:
            skipped += 1
            continue
        ranked = list(rank_fn(report))
        first_rank = next(
            (pos for pos, item in enumerate(ranked, start=1) if item in relevant), None
        )
        per_query[report.bug_id] = QueryEval(
            bug_id=report.bug_id,
            first_relevant_rank=first_rank,
            average_precision=average_precision(ranked, relevant),
            hits_at={k: accuracy_at_k(ranked, relevant, k) for k in k_list},
        )
    if not per_query:
        raise ValueError("no usable queries: every query had empty ground truth")
    n = len(per_query)
    # summing in sorted key order keeps aggregates invariant under query permutation
    evals = [per_query[bug_id] for bug_id in sorted(per_query)]
    return EvalReport(
        per_query=per_query,
        acc={k: sum(q.hits_at[k] for q in evals) / n for k in k_list},
        mrr=sum(1.0 / q.first_relevant_rank for q in evals if q.first_relevant_rank) / n,
        map=sum(q.average_precision for q in evals) / n,
        queries=n,
        skipped=skipped,
    )


def format_table(rows: dict[str, EvalReport], k_list: Sequence[int] = (1, 3, 5, 10)) -> str:
    """Plain-text results table: one row per model/strategy label."""
    k_list = sorted(set(k_list))
    headers = ["Model"] + [f"Acc@{k}" for k in k_list] + ["MAP", "MRR"]
    lines = []
    for label, report in rows.items():
        cells = [label]
        cells += [f"{report.acc[k]:.3f}" for k in k_list]
        cells += [f"{report.map:.3f}", f"{report.mrr:.3f}"]
        lines.append(cells)
    widths = [max(len(h), *(len(line[i]) for line in lines)) if lines else len(h)
              for i, h in enumerate(headers)]
    def fmt(cells: list[str]) -> str:
        return "  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip()
    return "\n".join([fmt(headers)] + [fmt(line) for line in lines]) + "\n"


def report_to_json_text(rows: dict[str, EvalReport]) -> str:
    return json.dumps({label: report.to_json() for label, report in rows.items()},
                      indent=2, sort_keys=True) + "\n"

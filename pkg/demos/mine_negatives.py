"""Walkthrough: similarity-mined negative pairs for fine-tuning.

A positive (bug report, file) pair turns into one positive training
record plus the files most similar to the buggy one as negatives. Note
how the same-named class in a sibling package lands at the top of the
negatives: that is the hard case this sampling exists for.

Run:  python demos/mine_negatives.py
"""
from __future__ import annotations

from bugloc import BugReport, DeterministicProvider, SourceFile, generate_training_pairs

CORPUS = [
    (
        "web/ConsumesRequestCondition.java",
        "package web; class ConsumesRequestCondition { boolean matchMediaType(Request r) { return r.ok(); } }",
    ),
    (
        "mvc/ConsumesRequestCondition.java",
        "package mvc; class ConsumesRequestCondition { boolean matchMediaType(Request r) { return !r.ok(); } }",
    ),
    ("web/HeadersCondition.java", "package web; class HeadersCondition { int weight() { return 2; } }"),
    ("util/Strings.java", "package util; class Strings { String pad(String s) { return s; } }"),
    ("db/Pool.java", "package db; class Pool { void drain() {} }"),
]


def main() -> None:
    corpus = [SourceFile.from_content(path, content) for path, content in CORPUS]
    bug = BugReport(
        bug_id="GH-123",
        title="media type matching broken for reactive consumes conditions",
        body="matchMediaType accepts requests it should reject",
        ground_truth_files=frozenset({"web/ConsumesRequestCondition.java"}),
    )

    pairs = generate_training_pairs(
        [(bug, "web/ConsumesRequestCondition.java")],
        corpus,
        DeterministicProvider(),
        top_n=3,
    )
    print(f"{len(pairs)} training pairs for {bug.bug_id}:\n")
    for pair in pairs:
        print(f"  label={pair.label}  {pair.file_path:<38} ({pair.source})")


if __name__ == "__main__":
    main()

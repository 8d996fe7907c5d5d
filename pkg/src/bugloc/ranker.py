"""Ranking strategies: code segments, commit messages, and their combination.

Segment ranking scores every code segment against the query, keeps the
top k, and ranks their files by occurrence count. Commit ranking does
the same over commit messages, expanding each top commit to its changed
files. The combined ranking fuses both item lists; two fusion semantics
exist behind a flag:

* ``score_merge`` (default): pool top-k segments and top-k commits into
  one list, sort by score, keep the top k items, then expand to files
  and rank by occurrence.
* ``file_union``: expand both full top-k item lists to file occurrences
  and rank the concatenation by occurrence.

Every ordering is a total order (count desc, best score desc, id asc),
so identical inputs always produce identical output.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .store import EmbeddingStore, cosine_scores

logger = logging.getLogger(__name__)

DEFAULT_K = 10

STRATEGY_SCORE_MERGE = "score_merge"
STRATEGY_FILE_UNION = "file_union"
STRATEGIES = (STRATEGY_SCORE_MERGE, STRATEGY_FILE_UNION)


@dataclass(frozen=True)
class ScoredItem:
    item_id: str
    score: float


@dataclass(frozen=True)
class FileEntry:
    path: str
    count: int
    best_score: float
    segments: tuple[str, ...] = ()
    commits: tuple[str, ...] = ()


@dataclass(frozen=True)
class RankedResult:
    bug_id: str
    granularity: str  # "segment" | "commit" | "file"
    entries: tuple


def ranked_occurrences(items: list[tuple[str, float]]) -> list[tuple[str, int, float]]:
    """(item, count, best_score) ordered by count desc, best score desc, id asc."""
    counts: dict[str, int] = {}
    best: dict[str, float] = {}
    for item, score in items:
        counts[item] = counts.get(item, 0) + 1
        if item not in best or score > best[item]:
            best[item] = score
    ordered = sorted(counts, key=lambda item: (-counts[item], -best[item], item))
    return [(item, counts[item], best[item]) for item in ordered]


def most_common(items: list[tuple[str, float]]) -> list[tuple[str, int]]:
    """Occurrence counting with the package-wide total-order tie-break."""
    return [(item, count) for item, count, _ in ranked_occurrences(items)]


def top_k_items(query: np.ndarray, store: EmbeddingStore, k: int) -> list[ScoredItem]:
    """Top-k stored items by cosine, ties broken by ascending item id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scored = cosine_scores(query, store)
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return [ScoredItem(item_id, score) for item_id, score in scored[:k]]


@dataclass(frozen=True)
class _Expansion:
    """One (file, score) vote cast by a top-ranked segment or commit."""

    path: str
    score: float
    item_id: str
    kind: str  # "segment" | "commit"


def _expand_segments(items: list[ScoredItem], seg_to_file: dict[str, str]) -> list[_Expansion]:
    out = []
    for item in items:
        path = seg_to_file.get(item.item_id)
        if path is None:
            logger.warning("segment %s missing from mapping; skipped", item.item_id)
            continue
        out.append(_Expansion(path, item.score, item.item_id, "segment"))
    return out


def _expand_commits(items: list[ScoredItem], commit_files: dict[str, tuple[str, ...]]) -> list[_Expansion]:
    out = []
    for item in items:
        paths = commit_files.get(item.item_id)
        if paths is None:
            logger.warning("commit %s missing from mapping; skipped", item.item_id)
            continue
        for path in sorted(paths):
            out.append(_Expansion(path, item.score, item.item_id, "commit"))
    return out


def _file_entries(expansions: list[_Expansion], k: int) -> tuple[FileEntry, ...]:
    occurrences = [(e.path, e.score) for e in expansions]
    entries = []
    for path, count, best_score in ranked_occurrences(occurrences)[:k]:
        segments = tuple(
            dict.fromkeys(e.item_id for e in expansions if e.path == path and e.kind == "segment")
        )
        commits = tuple(
            dict.fromkeys(e.item_id for e in expansions if e.path == path and e.kind == "commit")
        )
        entries.append(FileEntry(path, count, best_score, segments, commits))
    return tuple(entries)


def rank_code_segments(
    bug_id: str,
    query: np.ndarray,
    store: EmbeddingStore,
    seg_to_file: dict[str, str],
    k: int = DEFAULT_K,
) -> tuple[RankedResult, RankedResult]:
    """Top-k segments by cosine, plus their files ranked by occurrence."""
    if not len(store):
        logger.warning("segment store is empty; returning empty results")
        return (
            RankedResult(bug_id, "segment", ()),
            RankedResult(bug_id, "file", ()),
        )
    items = top_k_items(query, store, k)
    expansions = _expand_segments(items, seg_to_file)
    return (
        RankedResult(bug_id, "segment", tuple(items)),
        RankedResult(bug_id, "file", _file_entries(expansions, k)),
    )


def rank_commits(
    bug_id: str,
    query: np.ndarray,
    store: EmbeddingStore,
    commit_files: dict[str, tuple[str, ...]],
    k: int = DEFAULT_K,
) -> tuple[RankedResult, RankedResult]:
    """Top-k commits by message cosine, plus changed files by occurrence."""
    if not len(store):
        logger.warning("commit store is empty; returning empty results")
        return (
            RankedResult(bug_id, "commit", ()),
            RankedResult(bug_id, "file", ()),
        )
    items = top_k_items(query, store, k)
    expansions = _expand_commits(items, commit_files)
    return (
        RankedResult(bug_id, "commit", tuple(items)),
        RankedResult(bug_id, "file", _file_entries(expansions, k)),
    )


def rank_combined(
    bug_id: str,
    query: np.ndarray,
    segment_store: EmbeddingStore,
    commit_store: EmbeddingStore,
    seg_to_file: dict[str, str],
    commit_files: dict[str, tuple[str, ...]],
    k: int = DEFAULT_K,
    strategy: str = STRATEGY_SCORE_MERGE,
) -> RankedResult:
    """Fuse segment and commit rankings into one file ranking."""
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    have_segments = bool(len(segment_store))
    have_commits = bool(len(commit_store))
    if not have_segments and not have_commits:
        logger.warning("both stores are empty; returning empty combined result")
        return RankedResult(bug_id, "file", ())
    if not have_commits:
        logger.warning("commit store is empty; combined ranking degrades to segments only")
    if not have_segments:
        logger.warning("segment store is empty; combined ranking degrades to commits only")

    segment_items = top_k_items(query, segment_store, k) if have_segments else []
    commit_items = top_k_items(query, commit_store, k) if have_commits else []

    if strategy == STRATEGY_SCORE_MERGE:
        merged = [(item, "segment") for item in segment_items]
        merged += [(item, "commit") for item in commit_items]
        merged.sort(key=lambda pair: (-pair[0].score, pair[0].item_id, pair[1]))
        merged = merged[:k]
        expansions = _expand_segments(
            [item for item, kind in merged if kind == "segment"], seg_to_file
        )
        expansions += _expand_commits(
            [item for item, kind in merged if kind == "commit"], commit_files
        )
    else:
        expansions = _expand_segments(segment_items, seg_to_file)
        expansions += _expand_commits(commit_items, commit_files)

    return RankedResult(bug_id, "file", _file_entries(expansions, k))


def ranking_document(
    bug_id: str,
    strategy: str,
    k: int,
    combined: RankedResult,
    segments: RankedResult,
    commits: RankedResult,
) -> dict:
    """JSON-ready ranking report; the CLI and the service both emit this."""
    return {
        "bug_id": bug_id,
        "strategy": strategy,
        "k": k,
        "files": [
            {
                "path": entry.path,
                "count": entry.count,
                "best_score": entry.best_score,
                "segments": list(entry.segments),
                "commits": list(entry.commits),
            }
            for entry in combined.entries
        ],
        "segments": [
            {"segment_id": item.item_id, "score": item.score} for item in segments.entries
        ],
        "commits": [
            {"commit_id": item.item_id, "score": item.score} for item in commits.entries
        ],
    }

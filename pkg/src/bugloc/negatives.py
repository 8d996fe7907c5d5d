"""Similarity-mined negative pairs for fine-tuning.

For each positive (bug report, file) pair, the files most similar to
the positive file under a base provider become negatives: hard cases
like a same-named class in a sibling package, rather than random
in-batch picks. Pairs serialize to newline-delimited JSON, which is the
contract the trainer consumes.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .indexer import DEFAULT_SEG_LEN, SourceFile
from .ingest import BugReport
from .providers import embed
from .tokenize import tokenize

logger = logging.getLogger(__name__)

DEFAULT_TOP_N = 10

SOURCE_GROUND_TRUTH = "ground_truth"
SOURCE_SIMILARITY = "similarity_negative"


@dataclass(frozen=True)
class TrainingPair:
    bug_id: str
    report_text: str
    file_path: str
    label: int
    source: str


def file_embedding_text(file: SourceFile, seg_len: int = DEFAULT_SEG_LEN) -> str:
    """Whole-file text for similarity, truncated to the first seg_len tokens.

    Empty files fall back to their path so the provider never sees an
    empty string.
    """
    body = " ".join(tokenize(file.content)[:seg_len])
    return body if body else file.path


def _corpus_matrix(corpus: list[SourceFile], provider, seg_len: int) -> np.ndarray:
    texts = [file_embedding_text(file, seg_len) for file in corpus]
    return embed(texts, provider).astype(np.float64)


def _similar_to_row(matrix: np.ndarray, row: int, paths: list[str], top_n: int) -> list[str]:
    query = matrix[row]
    norms = np.linalg.norm(matrix, axis=1)
    query_norm = norms[row]
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(
            (norms > 0.0) & (query_norm > 0.0),
            matrix @ query / (norms * query_norm),
            0.0,
        )
    order = sorted(
        (i for i in range(len(paths)) if i != row),
        key=lambda i: (-scores[i], paths[i]),
    )
    return [paths[i] for i in order[:top_n]]


def top_similar_files(
    file: SourceFile,
    corpus: list[SourceFile],
    provider,
    top_n: int = DEFAULT_TOP_N,
    seg_len: int = DEFAULT_SEG_LEN,
) -> list[str]:
    """Paths of the top_n most similar corpus files, the file itself excluded."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    paths = [f.path for f in corpus]
    if file.path not in paths:
        raise ValueError(f"corpus does not contain {file.path}")
    if len(corpus) == 1:
        logger.warning("corpus holds only the query file; no similar files exist")
        return []
    matrix = _corpus_matrix(corpus, provider, seg_len)
    return _similar_to_row(matrix, paths.index(file.path), paths, top_n)


def generate_training_pairs(
    positives: list[tuple[BugReport, str]],
    corpus: list[SourceFile],
    provider,
    top_n: int = DEFAULT_TOP_N,
    seg_len: int = DEFAULT_SEG_LEN,
) -> list[TrainingPair]:
    """One positive pair plus up to top_n similarity negatives per positive.

    Negatives that coincide with another ground-truth file of the same
    bug are dropped (they would be mislabeled). Output order and content
    are deterministic; duplicate (bug, file, label) triples are emitted
    once.
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    paths = [f.path for f in corpus]
    row_of = {path: i for i, path in enumerate(paths)}
    matrix = _corpus_matrix(corpus, provider, seg_len) if corpus else None

    pairs: list[TrainingPair] = []
    seen: set[tuple[str, str, int]] = set()

    def emit(pair: TrainingPair) -> None:
        key = (pair.bug_id, pair.file_path, pair.label)
        if key not in seen:
            seen.add(key)
            pairs.append(pair)

    for report, positive_path in positives:
        row = row_of.get(positive_path)
        if row is None:
            logger.warning(
                "positive file %s for bug %s missing from corpus; skipped",
                positive_path,
                report.bug_id,
            )
            continue
        emit(TrainingPair(report.bug_id, report.query_text, positive_path, 1, SOURCE_GROUND_TRUTH))
        if len(corpus) == 1:
            logger.warning("corpus holds a single file; no negatives for %s", report.bug_id)
            continue
        for neighbor in _similar_to_row(matrix, row, paths, top_n):
            if neighbor in report.ground_truth_files:
                continue
            emit(TrainingPair(report.bug_id, report.query_text, neighbor, 0, SOURCE_SIMILARITY))
    return pairs


def write_pairs_ndjson(pairs: list[TrainingPair], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for pair in pairs:
            handle.write(json.dumps(asdict(pair), sort_keys=True) + "\n")


def read_pairs_ndjson(path: str | Path) -> list[TrainingPair]:
    pairs = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                pairs.append(TrainingPair(**json.loads(line)))
    return pairs

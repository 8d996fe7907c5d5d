"""End-to-end wiring: index a repository into stores, rank against them.

``build_index`` walks the configured repo, extracts commit history,
builds or refreshes the two embedding stores (code segments, commit
messages), and persists everything under ``store_dir``:

    store_dir/
      segments/           embedding store for code segments
      commits/            embedding store for commit messages
      mappings.json       segment -> file and commit -> changed files
      index_report.json   {"files", "segments", "skipped", "seg_len", "prefix_mode"}

``RankingEngine`` loads that state and answers queries; the CLI and the
HTTP service are both thin layers over it.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import Config
from .errors import StoreBuildError, StoreError
from .indexer import IndexerConfig, PrefixMode, index_repository
from .ingest import load_commits
from .providers import DeterministicProvider, RemoteHttpProvider, embed
from .ranker import (
    DEFAULT_K,
    RankedResult,
    rank_code_segments,
    rank_combined,
    rank_commits,
    ranking_document,
)
from .store import EmbeddingStore, diff_items, refresh

logger = logging.getLogger(__name__)

SEGMENTS_DIR = "segments"
COMMITS_DIR = "commits"
MAPPINGS_NAME = "mappings.json"
INDEX_REPORT_NAME = "index_report.json"


def make_provider(config: Config):
    if config.provider.kind == "remote_http":
        return RemoteHttpProvider(url=config.provider.url, dim=config.provider.dim)
    return DeterministicProvider(dim=config.provider.dim)


def _load_or_empty(directory: Path, provider) -> EmbeddingStore:
    try:
        store = EmbeddingStore.load(directory)
    except StoreError:
        return EmbeddingStore(provider_name=provider.name, dim=provider.dim)
    if store.dim != provider.dim or store.provider_name != provider.name:
        logger.warning(
            "store at %s was built by %s/dim=%d, provider is %s/dim=%d; rebuilding",
            directory, store.provider_name, store.dim, provider.name, provider.dim,
        )
        return EmbeddingStore(provider_name=provider.name, dim=provider.dim)
    return store


def build_index(config: Config) -> dict:
    """Run the full embedding-generation pass; returns a summary dict.

    Incremental: unchanged items are not re-embedded, and if nothing
    changed at all the persisted store files are left untouched.
    """
    provider = make_provider(config)
    indexer_cfg = IndexerConfig(
        seg_len=config.seg_len,
        include_globs=config.include_globs,
        exclude_globs=config.exclude_globs,
    )
    result = index_repository(config.repo_root, indexer_cfg)
    commits = load_commits(config.repo_root)

    segment_items = [(segment.segment_id, segment.text) for segment in result.segments]
    commit_items = []
    for commit in commits:
        if commit.message.strip():
            commit_items.append((commit.commit_id, commit.message))
        else:
            logger.warning("commit %s has an empty message; not embedded", commit.commit_id)

    store_dir = Path(config.store_dir)
    seg_dir = store_dir / SEGMENTS_DIR
    com_dir = store_dir / COMMITS_DIR

    summary = {"files": len(result.files), "segments": len(result.segments), "commits": len(commits)}
    for label, directory, items in (
        ("segments", seg_dir, segment_items),
        ("commits", com_dir, commit_items),
    ):
        old = _load_or_empty(directory, provider)
        diff = diff_items(old, items)
        try:
            new = refresh(old, items, provider)
        except StoreBuildError as exc:
            # keep what did embed so a rerun only retries the failures
            exc.partial_store.save(directory)
            logger.error(
                "%s store build failed; partial store of %d items saved to %s",
                label, len(exc.partial_store), directory,
            )
            raise
        if not diff.is_noop or not directory.exists():
            new.save(directory)
        summary[f"{label}_reembedded"] = diff.reembedded
        summary[f"{label}_removed"] = len(diff.removed)

    mappings = {
        "seg_to_file": {segment.segment_id: segment.file_path for segment in result.segments},
        "commit_files": {
            commit.commit_id: sorted(commit.changed_files) for commit in commits
        },
    }
    store_dir.mkdir(parents=True, exist_ok=True)
    (store_dir / MAPPINGS_NAME).write_text(
        json.dumps(mappings, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (store_dir / INDEX_REPORT_NAME).write_text(
        json.dumps(result.report(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    summary["skipped"] = sorted(result.skipped)
    return summary


@dataclass
class RankingEngine:
    """Immutable ranking state: provider + stores + item-to-file mappings."""

    provider: object
    segment_store: EmbeddingStore
    commit_store: EmbeddingStore
    seg_to_file: dict
    commit_files: dict
    default_k: int = DEFAULT_K
    default_strategy: str = "score_merge"

    @classmethod
    def load(cls, config: Config) -> "RankingEngine":
        store_dir = Path(config.store_dir)
        mappings_path = store_dir / MAPPINGS_NAME
        if not mappings_path.is_file():
            raise StoreError(f"no index at {store_dir}; run the index command first")
        mappings = json.loads(mappings_path.read_text(encoding="utf-8"))
        provider = make_provider(config)
        return cls(
            provider=provider,
            segment_store=_load_or_empty(store_dir / SEGMENTS_DIR, provider),
            commit_store=_load_or_empty(store_dir / COMMITS_DIR, provider),
            seg_to_file=dict(mappings["seg_to_file"]),
            commit_files={k: tuple(v) for k, v in mappings["commit_files"].items()},
            default_k=config.k,
            default_strategy=config.strategy,
        )

    def embed_query(self, text: str) -> np.ndarray:
        return embed([text], self.provider)[0]

    def rank(
        self,
        bug_id: str,
        text: str,
        k: int | None = None,
        strategy: str | None = None,
    ) -> dict:
        """Canonical ranking document for one query."""
        k = k or self.default_k
        strategy = strategy or self.default_strategy
        query = self.embed_query(text)
        segments, _ = rank_code_segments(bug_id, query, self.segment_store, self.seg_to_file, k)
        commits, _ = rank_commits(bug_id, query, self.commit_store, self.commit_files, k)
        combined = rank_combined(
            bug_id,
            query,
            self.segment_store,
            self.commit_store,
            self.seg_to_file,
            self.commit_files,
            k,
            strategy,
        )
        return ranking_document(bug_id, strategy, k, combined, segments, commits)

    def rank_files(self, text: str, mode: str, k: int | None = None) -> list[str]:
        """Ranked file paths for one query under one retrieval mode.

        mode: "segment", "commit", "score_merge", or "file_union".
        """
        k = k or self.default_k
        query = self.embed_query(text)
        if mode == "segment":
            _, files = rank_code_segments(
                "q", query, self.segment_store, self.seg_to_file, k
            )
            return [entry.path for entry in files.entries]
        if mode == "commit":
            _, files = rank_commits("q", query, self.commit_store, self.commit_files, k)
            return [entry.path for entry in files.entries]
        combined = rank_combined(
            "q",
            query,
            self.segment_store,
            self.commit_store,
            self.seg_to_file,
            self.commit_files,
            k,
            mode,
        )
        return [entry.path for entry in combined.entries]


def render_ranking(doc: dict) -> str:
    """The one serialization used by both the CLI and the service."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"

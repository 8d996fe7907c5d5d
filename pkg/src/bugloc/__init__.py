"""Bug localization by embedding retrieval over code segments and commits."""

from .config import Config, ProviderConfig, load_config
from .indexer import (
    CodeSegment,
    IndexerConfig,
    IndexResult,
    PrefixMode,
    SourceFile,
    extract_prefix,
    index_repository,
    segment_file,
    stable_hash64,
)
from .ingest import (
    BugReport,
    CommitRecord,
    build_ground_truth,
    load_bug_reports,
    load_commits,
)
from .metrics import (
    EvalReport,
    accuracy_at_k,
    average_precision,
    evaluate,
    format_table,
    reciprocal_rank,
)
from .negatives import (
    TrainingPair,
    generate_training_pairs,
    read_pairs_ndjson,
    top_similar_files,
    write_pairs_ndjson,
)
from .pipeline import RankingEngine, build_index, make_provider, render_ranking
from .providers import DeterministicProvider, RemoteHttpProvider, embed
from .ranker import (
    FileEntry,
    RankedResult,
    ScoredItem,
    most_common,
    rank_code_segments,
    rank_combined,
    rank_commits,
)
from .store import EmbeddingStore, build_store, cosine_scores, diff_items, refresh
from .tokenize import split_identifier, split_with_separators, tokenize

__version__ = "0.1.0"

__all__ = [
    "BugReport",
    "CodeSegment",
    "CommitRecord",
    "Config",
    "DeterministicProvider",
    "EmbeddingStore",
    "EvalReport",
    "FileEntry",
    "IndexResult",
    "IndexerConfig",
    "PrefixMode",
    "ProviderConfig",
    "RankedResult",
    "RankingEngine",
    "RemoteHttpProvider",
    "ScoredItem",
    "SourceFile",
    "TrainingPair",
    "accuracy_at_k",
    "average_precision",
    "build_ground_truth",
    "build_index",
    "build_store",
    "cosine_scores",
    "diff_items",
    "embed",
    "evaluate",
    "extract_prefix",
    "format_table",
    "generate_training_pairs",
    "index_repository",
    "load_bug_reports",
    "load_commits",
    "load_config",
    "make_provider",
    "most_common",
    "rank_code_segments",
    "rank_combined",
    "rank_commits",
    "read_pairs_ndjson",
    "reciprocal_rank",
    "refresh",
    "render_ranking",
    "segment_file",
    "split_identifier",
    "split_with_separators",
    "stable_hash64",
    "tokenize",
    "top_similar_files",
    "write_pairs_ndjson",
]

"""Persisted embedding store with hash-driven incremental refresh.

On-disk layout (one directory per store):

    manifest.json   {"provider": ..., "dim": ..., "count": ..., "created_utc": ...}
    items.tsv       item_id <TAB> content_hash <TAB> row_index, sorted by item_id
    vectors.bin     row-major float32, little-endian, rows follow items.tsv

Unchanged items keep their exact float32 bytes across refreshes, so
"what got re-embedded" is observable by comparing rows. Files are
written via temp file + atomic rename; a refresh that changes nothing
leaves the directory untouched.
"""
from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import StoreBuildError, StoreError
from .indexer import stable_hash64
from .providers import embed

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 32

MANIFEST_NAME = "manifest.json"
ITEMS_NAME = "items.tsv"
VECTORS_NAME = "vectors.bin"


@dataclass
class EmbeddingStore:
    provider_name: str
    dim: int
    ids: list[str] = field(default_factory=list)
    hashes: list[str] = field(default_factory=list)
    vectors: np.ndarray | None = None  # (n, dim) float32, rows parallel to ids

    def __post_init__(self) -> None:
        if self.vectors is None:
            self.vectors = np.zeros((0, self.dim), dtype=np.float32)
        self._row_of = {item_id: row for row, item_id in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._row_of

    def hash_of(self, item_id: str) -> str:
        return self.hashes[self._row_of[item_id]]

    def vector_of(self, item_id: str) -> np.ndarray:
        return self.vectors[self._row_of[item_id]]

    @classmethod
    def from_items(
        cls,
        provider_name: str,
        dim: int,
        entries: list[tuple[str, str, np.ndarray]],
    ) -> "EmbeddingStore":
        """Build from (item_id, content_hash, vector) rows, sorted by id."""
        entries = sorted(entries, key=lambda e: e[0])
        ids = [e[0] for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("item ids must be unique")
        hashes = [e[1] for e in entries]
        if entries:
            vectors = np.stack([np.asarray(e[2], dtype=np.float32) for e in entries])
        else:
            vectors = np.zeros((0, dim), dtype=np.float32)
        if vectors.shape[1:] != (dim,) and len(entries):
            raise ValueError(f"vector dim {vectors.shape[1:]} != store dim {dim}")
        return cls(provider_name=provider_name, dim=dim, ids=ids, hashes=hashes, vectors=vectors)

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "provider": self.provider_name,
            "dim": self.dim,
            "count": len(self.ids),
            "created_utc": int(time.time()),
        }
        items_text = "".join(
            f"{item_id}\t{item_hash}\t{row}\n"
            for row, (item_id, item_hash) in enumerate(zip(self.ids, self.hashes))
        )
        _atomic_write_bytes(directory / VECTORS_NAME, self.vectors.astype(np.float32).tobytes())
        _atomic_write_bytes(directory / ITEMS_NAME, items_text.encode("utf-8"))
        _atomic_write_bytes(
            directory / MANIFEST_NAME,
            (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"),
        )

    @classmethod
    def load(cls, directory: str | Path) -> "EmbeddingStore":
        directory = Path(directory)
        manifest_path = directory / MANIFEST_NAME
        if not manifest_path.is_file():
            raise StoreError(f"no store manifest at {manifest_path}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        dim = int(manifest["dim"])
        count = int(manifest["count"])
        ids: list[str] = []
        hashes: list[str] = []
        for line in (directory / ITEMS_NAME).read_text(encoding="utf-8").splitlines():
            item_id, item_hash, _row = line.split("\t")
            ids.append(item_id)
            hashes.append(item_hash)
        raw = np.fromfile(directory / VECTORS_NAME, dtype="<f4")
        if len(ids) != count or raw.size != count * dim:
            raise StoreError(
                f"store at {directory} is inconsistent: manifest count {count}, "
                f"{len(ids)} items, {raw.size} floats"
            )
        vectors = raw.reshape(count, dim)
        if count and not np.isfinite(vectors).all():
            raise StoreError(f"store at {directory} contains NaN/Inf vectors")
        return cls(
            provider_name=str(manifest["provider"]),
            dim=dim,
            ids=ids,
            hashes=hashes,
            vectors=vectors,
        )


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class ItemDiff:
    added: tuple[str, ...]
    changed: tuple[str, ...]
    removed: tuple[str, ...]
    unchanged: tuple[str, ...]

    @property
    def reembedded(self) -> int:
        return len(self.added) + len(self.changed)

    @property
    def is_noop(self) -> bool:
        return not (self.added or self.changed or self.removed)


def diff_items(store: EmbeddingStore, current_items: list[tuple[str, str]]) -> ItemDiff:
    """Classify ``(item_id, text)`` items against what the store holds."""
    current_ids = set()
    added, changed, unchanged = [], [], []
    for item_id, text in current_items:
        current_ids.add(item_id)
        if item_id not in store:
            added.append(item_id)
        elif store.hash_of(item_id) != stable_hash64(text):
            changed.append(item_id)
        else:
            unchanged.append(item_id)
    removed = [item_id for item_id in store.ids if item_id not in current_ids]
    return ItemDiff(
        added=tuple(sorted(added)),
        changed=tuple(sorted(changed)),
        removed=tuple(sorted(removed)),
        unchanged=tuple(sorted(unchanged)),
    )


def _embed_entries(
    items: list[tuple[str, str]],
    provider,
    batch_size: int,
) -> tuple[list[tuple[str, str, np.ndarray]], list[str], Exception | None]:
    """Embed items in batches; collect failures instead of dying mid-run."""
    entries: list[tuple[str, str, np.ndarray]] = []
    failed: list[str] = []
    first_error: Exception | None = None
    for start in range(0, len(items), batch_size):
        batch = items[start : start + batch_size]
        texts = [text for _, text in batch]
        try:
            vectors = embed(texts, provider)
        except Exception as exc:  # noqa: BLE001 - recorded for resume
            logger.warning("batch of %d items starting at %d failed: %s", len(batch), start, exc)
            failed.extend(item_id for item_id, _ in batch)
            first_error = first_error or exc
            continue
        for (item_id, text), vector in zip(batch, vectors):
            entries.append((item_id, stable_hash64(text), vector))
    return entries, failed, first_error


def build_store(
    items: list[tuple[str, str]],
    provider,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> EmbeddingStore:
    """Embed ``(item_id, text)`` items into a fresh store.

    Provider failures raise StoreBuildError carrying the valid partial
    store plus the ids still to embed.
    """
    ids = [item_id for item_id, _ in items]
    if len(set(ids)) != len(ids):
        raise ValueError("item ids must be unique")
    entries, failed, first_error = _embed_entries(list(items), provider, batch_size)
    store = EmbeddingStore.from_items(provider.name, provider.dim, entries)
    if failed:
        raise StoreBuildError(
            f"{len(failed)} of {len(items)} items failed to embed: {first_error}",
            partial_store=store,
            failed_ids=sorted(failed),
        )
    return store


def refresh(
    store: EmbeddingStore,
    current_items: list[tuple[str, str]],
    provider,
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> EmbeddingStore:
    """Bring a store in line with ``current_items``.

    Removed ids drop out, changed hashes re-embed, unchanged vectors are
    carried over byte-identical. Idempotent: refreshing twice with the
    same items equals refreshing once.
    """
    ids = [item_id for item_id, _ in current_items]
    if len(set(ids)) != len(ids):
        raise ValueError("item ids must be unique")
    diff = diff_items(store, current_items)
    if diff.is_noop:
        return store
    needs_embedding = set(diff.added) | set(diff.changed)
    to_embed = [(i, t) for i, t in current_items if i in needs_embedding]
    entries, failed, first_error = _embed_entries(to_embed, provider, batch_size)
    entries.extend(
        (item_id, store.hash_of(item_id), store.vector_of(item_id).copy())
        for item_id in diff.unchanged
    )
    new_store = EmbeddingStore.from_items(provider.name, provider.dim, entries)
    if failed:
        raise StoreBuildError(
            f"{len(failed)} items failed to re-embed: {first_error}",
            partial_store=new_store,
            failed_ids=sorted(failed),
        )
    return new_store


def cosine_scores(query: np.ndarray, store: EmbeddingStore) -> list[tuple[str, float]]:
    """Cosine similarity of the query against every stored vector.

    Zero-norm stored vectors score 0.0 by convention. Output order is
    the store's row order; the ranker sorts.
    """
    query = np.asarray(query, dtype=np.float64).reshape(-1)
    if query.shape[0] != store.dim:
        raise ValueError(f"query dim {query.shape[0]} != store dim {store.dim}")
    query_norm = float(np.linalg.norm(query))
    if query_norm == 0.0:
        raise ValueError("query vector must have positive norm")
    if not len(store):
        return []
    matrix = store.vectors.astype(np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    dots = matrix @ query
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(norms > 0.0, dots / (norms * query_norm), 0.0)
    return list(zip(store.ids, scores.tolist()))

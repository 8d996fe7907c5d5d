"""Training data: the retrieval engine's newline-JSON pair export.

Each line is ``{"bug_id", "report_text", "file_path", "label",
"source"}``. The export carries file paths, not file contents, so file
text is read from an optional ``corpus_root``; when the file is absent
(or no root is given) the path string itself stands in as the text,
which is plenty at toy scale.
"""
from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass
from pathlib import Path

import torch
from torch import Tensor

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"[A-Za-z0-9_]+")

PAD, UNK, SEP = 0, 1, 2
_SPECIALS = ("<pad>", "<unk>", "<sep>")


@dataclass(frozen=True)
class TrainingPair:
    bug_id: str
    report_text: str
    file_path: str
    label: int
    source: str


def load_pairs(path: str | Path) -> list[TrainingPair]:
    pairs = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            try:
                pairs.append(
                    TrainingPair(
                        bug_id=str(record["bug_id"]),
                        report_text=str(record["report_text"]),
                        file_path=str(record["file_path"]),
                        label=int(record["label"]),
                        source=str(record.get("source", "")),
                    )
                )
            except KeyError as exc:
                raise ValueError(f"{path}:{line_no}: pair record missing {exc}") from exc
    return pairs


def words(text: str) -> list[str]:
    return [w.lower() for w in _WORD_RE.findall(text)]


class Vocab:
    def __init__(self, token_to_id: dict[str, int]):
        self.token_to_id = token_to_id

    def __len__(self) -> int:
        return len(self.token_to_id)

    @classmethod
    def build(cls, texts: list[str], max_size: int = 4096) -> "Vocab":
        counts: dict[str, int] = {}
        for text in texts:
            for token in words(text):
                counts[token] = counts.get(token, 0) + 1
        ranked = sorted(counts, key=lambda t: (-counts[t], t))[: max_size - len(_SPECIALS)]
        mapping = {token: i for i, token in enumerate(_SPECIALS)}
        for token in ranked:
            mapping[token] = len(mapping)
        return cls(mapping)

    def encode(self, text: str, max_len: int) -> tuple[list[int], list[int]]:
        ids = [self.token_to_id.get(t, UNK) for t in words(text)][:max_len]
        if not ids:
            ids = [UNK]
        mask = [1] * len(ids) + [0] * (max_len - len(ids))
        return ids + [PAD] * (max_len - len(ids)), mask


def resolve_file_text(pair: TrainingPair, corpus_root: Path | None) -> str:
    if corpus_root is not None:
        candidate = corpus_root / pair.file_path
        if candidate.is_file():
            try:
                return candidate.read_text(encoding="utf-8", errors="replace")
            except OSError as exc:
                logger.warning("cannot read %s (%s); using the path as text", candidate, exc)
    return pair.file_path.replace("/", " ")


@dataclass
class PairDataset:
    """Tensorized pairs: separate report/file views plus a packed view."""

    report_ids: Tensor  # (n, l)
    report_mask: Tensor
    file_ids: Tensor
    file_mask: Tensor
    packed_ids: Tensor  # report ++ SEP ++ file, truncated to l
    packed_mask: Tensor
    labels: Tensor  # (n,)
    pairs: list[TrainingPair]

    def __len__(self) -> int:
        return self.labels.shape[0]


def build_dataset(
    pairs: list[TrainingPair],
    vocab: Vocab,
    max_len: int,
    corpus_root: Path | None = None,
) -> PairDataset:
    report_ids, report_mask = [], []
    file_ids, file_mask = [], []
    packed_ids, packed_mask = [], []
    labels = []
    half = (max_len - 1) // 2
    for pair in pairs:
        file_text = resolve_file_text(pair, corpus_root)
        r_ids, r_mask = vocab.encode(pair.report_text, max_len)
        f_ids, f_mask = vocab.encode(file_text, max_len)
        report_ids.append(r_ids)
        report_mask.append(r_mask)
        file_ids.append(f_ids)
        file_mask.append(f_mask)

        r_half = [i for i in r_ids if i != PAD][:half]
        f_half = [i for i in f_ids if i != PAD][: max_len - 1 - len(r_half)]
        packed = r_half + [SEP] + f_half
        p_mask = [1] * len(packed) + [0] * (max_len - len(packed))
        packed_ids.append(packed + [PAD] * (max_len - len(packed)))
        packed_mask.append(p_mask)
        labels.append(pair.label)
    return PairDataset(
        report_ids=torch.tensor(report_ids, dtype=torch.long),
        report_mask=torch.tensor(report_mask, dtype=torch.long),
        file_ids=torch.tensor(file_ids, dtype=torch.long),
        file_mask=torch.tensor(file_mask, dtype=torch.long),
        packed_ids=torch.tensor(packed_ids, dtype=torch.long),
        packed_mask=torch.tensor(packed_mask, dtype=torch.long),
        labels=torch.tensor(labels, dtype=torch.long),
        pairs=list(pairs),
    )


def batch_indices(n: int, batch_size: int, rng: random.Random, shuffle: bool = True):
    order = list(range(n))
    if shuffle:
        rng.shuffle(order)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]

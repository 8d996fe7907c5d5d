"""Training loops: contrastive fine-tuning and teacher->student distillation.

Both loops follow the same skeleton: AdamW over shuffled batches,
periodic validation, checkpoint whenever validation improves. The
fine-tuning loop optimizes the bi-encoder pair objective and validates
by ranking accuracy@10; the distillation loop packs each pair into one
sequence, trains the truncated student against the frozen teacher's
last-layer knowledge, and validates by pair-classification accuracy.
Checkpoints are a directory holding ``weights.pt`` plus ``config.json``
with {L, d, h, l, k, alpha, beta, tau, seed}; per-step losses stream to
``metrics.csv``.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path

import torch
import torch.nn.functional as F

from .data import PairDataset, batch_indices
from .losses import DistillLosses, LossWeights, combined_kd_loss, distill_losses, finetune_loss
from .model import EncoderConfig, TinyEncoder, init_student

logger = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    """Loss went NaN/Inf; training aborted."""


@dataclass
class StepMetrics:
    step: int
    task_loss: float
    pred_loss: float
    hidden_loss: float
    attention_loss: float
    val_result: float | None = None


def save_pretrained(
    model: TinyEncoder,
    directory: str | Path,
    *,
    k: int,
    weights: LossWeights,
    seed: int,
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), directory / "weights.pt")
    config = {
        "L": model.config.num_layers,
        "d": model.config.hidden,
        "h": model.config.heads,
        "l": model.config.max_len,
        "vocab_size": model.config.vocab_size,
        "ffn": model.config.ffn,
        "logit_dim": model.config.logit_dim,
        "k": k,
        "alpha": weights.kd_alpha,
        "beta": weights.finetune_beta,
        "tau": weights.scl_temperature,
        "seed": seed,
    }
    (directory / "config.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return directory


def load_pretrained(directory: str | Path) -> TinyEncoder:
    directory = Path(directory)
    raw = json.loads((directory / "config.json").read_text(encoding="utf-8"))
    model = TinyEncoder(
        EncoderConfig(
            num_layers=raw["L"],
            hidden=raw["d"],
            heads=raw["h"],
            max_len=raw["l"],
            vocab_size=raw["vocab_size"],
            ffn=raw["ffn"],
            logit_dim=raw["logit_dim"],
        )
    )
    model.load_state_dict(torch.load(directory / "weights.pt", weights_only=True))
    return model


def write_metrics_csv(metrics: list[StepMetrics], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["step", "task_loss", "pred_loss", "hidden_loss", "attention_loss", "val_result"])
        for row in metrics:
            writer.writerow(
                [
                    row.step,
                    f"{row.task_loss:.6f}",
                    f"{row.pred_loss:.6f}",
                    f"{row.hidden_loss:.6f}",
                    f"{row.attention_loss:.6f}",
                    "" if row.val_result is None else f"{row.val_result:.6f}",
                ]
            )


def _check_finite(value: torch.Tensor, step: int, context: dict[str, float]) -> None:
    if not torch.isfinite(value):
        raise TrainingDiverged(
            f"non-finite loss at step {step}: "
            + ", ".join(f"{name}={val:.4g}" for name, val in context.items())
        )


def ranking_accuracy_at_k(model: TinyEncoder, dataset: PairDataset, k: int = 10) -> float:
    """Accuracy@k of ranking the dataset's files for its bug reports.

    Files are the distinct file paths in the dataset; each bug report's
    relevant set is its positively labeled files.
    """
    file_rows: dict[str, int] = {}
    report_rows: dict[str, int] = {}
    relevant: dict[str, set[str]] = {}
    for row, pair in enumerate(dataset.pairs):
        file_rows.setdefault(pair.file_path, row)
        if pair.label == 1:
            report_rows.setdefault(pair.bug_id, row)
            relevant.setdefault(pair.bug_id, set()).add(pair.file_path)
    if not relevant:
        raise ValueError("dataset has no positive pairs to validate against")

    paths = sorted(file_rows)
    file_idx = torch.tensor([file_rows[p] for p in paths])
    bug_ids = sorted(relevant)
    report_idx = torch.tensor([report_rows[b] for b in bug_ids])
    model.eval()
    with torch.no_grad():
        file_emb = model.embed_text(dataset.file_ids[file_idx], dataset.file_mask[file_idx])
        report_emb = model.embed_text(dataset.report_ids[report_idx], dataset.report_mask[report_idx])
        scores = F.normalize(report_emb, dim=1) @ F.normalize(file_emb, dim=1).T
    hits = 0
    top = min(k, len(paths))
    order = scores.argsort(dim=1, descending=True)[:, :top]
    for i, bug_id in enumerate(bug_ids):
        ranked = [paths[j] for j in order[i].tolist()]
        hits += int(bool(set(ranked) & relevant[bug_id]))
    return hits / len(bug_ids)


def classification_accuracy(model: TinyEncoder, dataset: PairDataset) -> float:
    model.eval()
    with torch.no_grad():
        logits = model(dataset.packed_ids, dataset.packed_mask).logits
    predicted = logits.argmax(dim=1)
    return float((predicted == dataset.labels).float().mean())


@dataclass
class FinetuneResult:
    model: TinyEncoder
    metrics: list[StepMetrics]
    best_accuracy: float
    evaluations: int
    checkpoint_dir: Path | None


def finetune(
    model: TinyEncoder,
    train_data: PairDataset,
    val_data: PairDataset,
    *,
    epochs: int = 1,
    eval_every: int = 10,
    batch_size: int = 8,
    lr: float = 1e-3,
    weight_decay: float = 0.01,
    weights: LossWeights = LossWeights(),
    seed: int = 0,
    out_dir: str | Path | None = None,
) -> FinetuneResult:
    """Contrastive fine-tuning over (report, file, label) pairs.

    Every ``eval_every`` steps, ranking accuracy@10 on the validation
    pairs decides whether to checkpoint.
    """
    if eval_every < 1:
        raise ValueError("eval_every must be >= 1")
    torch.manual_seed(seed)
    rng = random.Random(seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr, weight_decay=weight_decay)
    metrics: list[StepMetrics] = []
    best_accuracy = 0.0
    evaluations = 0
    checkpoint_dir: Path | None = None
    step = 0
    for _ in range(epochs):
        for batch in batch_indices(len(train_data), batch_size, rng):
            if len(batch) < 2:
                continue  # SCL needs at least two samples
            step += 1
            model.train()
            idx = torch.tensor(batch)
            report_emb = model.embed_text(dataset_rows(train_data.report_ids, idx), dataset_rows(train_data.report_mask, idx))
            file_emb = model.embed_text(dataset_rows(train_data.file_ids, idx), dataset_rows(train_data.file_mask, idx))
            loss = finetune_loss(report_emb, file_emb, train_data.labels[idx], weights)
            observed = {"mse": loss.mse.detach().item(), "scl": loss.scl.detach().item()}
            _check_finite(loss.total.detach(), step, observed)
            optimizer.zero_grad()
            loss.total.backward()
            optimizer.step()

            row = StepMetrics(
                step=step,
                task_loss=loss.total.detach().item(),
                pred_loss=observed["mse"],
                hidden_loss=0.0,
                attention_loss=0.0,
            )
            if step % eval_every == 0:
                accuracy = ranking_accuracy_at_k(model, val_data, k=10)
                evaluations += 1
                row.val_result = accuracy
                if accuracy > best_accuracy:
                    best_accuracy = accuracy
                    if out_dir is not None:
                        checkpoint_dir = save_pretrained(
                            model, Path(out_dir) / "best",
                            k=model.config.num_layers, weights=weights, seed=seed,
                        )
            metrics.append(row)
    if out_dir is not None:
        write_metrics_csv(metrics, Path(out_dir) / "metrics.csv")
    return FinetuneResult(model, metrics, best_accuracy, evaluations, checkpoint_dir)


def dataset_rows(tensor: torch.Tensor, idx: torch.Tensor) -> torch.Tensor:
    return tensor.index_select(0, idx)


@dataclass
class DistillationResult:
    student: TinyEncoder
    metrics: list[StepMetrics]
    best_result: float
    evaluations: int
    eval_interval: int
    checkpoint_dir: Path | None


def train_student(
    teacher: TinyEncoder,
    train_data: PairDataset,
    val_data: PairDataset,
    *,
    epochs: int = 1,
    k: int = 3,
    alpha: float = 0.9,
    batch_size: int = 8,
    lr: float = 1e-3,
    weight_decay: float = 0.01,
    weights: LossWeights | None = None,
    seed: int = 0,
    out_dir: str | Path | None = None,
) -> DistillationResult:
    """Distill a frozen teacher into a k-layer student.

    The validation cadence is t = floor(epochs * |train| / 20) steps
    (floored at 1 for tiny datasets); the best validation result is
    checkpointed.
    """
    weights = weights or LossWeights(kd_alpha=alpha)
    torch.manual_seed(seed)
    rng = random.Random(seed)
    teacher.eval()
    for parameter in teacher.parameters():
        parameter.requires_grad_(False)
    student = init_student(teacher, k)
    optimizer = torch.optim.AdamW(student.parameters(), lr=lr, weight_decay=weight_decay)

    interval = max(1, (epochs * len(train_data)) // 20)
    metrics: list[StepMetrics] = []
    best_result = 0.0
    evaluations = 0
    checkpoint_dir: Path | None = None
    step = 0
    for _ in range(epochs):
        for batch in batch_indices(len(train_data), batch_size, rng):
            step += 1
            idx = torch.tensor(batch)
            tokens = train_data.packed_ids[idx]
            mask = train_data.packed_mask[idx]
            labels = train_data.labels[idx]

            student.train()
            student_out = student(tokens, mask)
            with torch.no_grad():
                teacher_out = teacher(tokens, mask)
            distill = distill_losses(teacher_out, student_out)
            task_loss = F.cross_entropy(student_out.logits, labels)
            loss = combined_kd_loss(task_loss, distill, alpha)
            observed = {
                "task": task_loss.detach().item(),
                "pred": distill.prediction.detach().item(),
                "hidden": distill.hidden.detach().item(),
                "attention": distill.attention.detach().item(),
            }
            _check_finite(loss.detach(), step, observed)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()

            row = StepMetrics(
                step=step,
                task_loss=observed["task"],
                pred_loss=observed["pred"],
                hidden_loss=observed["hidden"],
                attention_loss=observed["attention"],
            )
            if step % interval == 0:
                result = classification_accuracy(student, val_data)
                evaluations += 1
                row.val_result = result
                if result > best_result:
                    best_result = result
                    if out_dir is not None:
                        checkpoint_dir = save_pretrained(
                            student, Path(out_dir) / "best", k=k, weights=weights, seed=seed
                        )
            metrics.append(row)
    if out_dir is not None:
        write_metrics_csv(metrics, Path(out_dir) / "metrics.csv")
    return DistillationResult(student, metrics, best_result, evaluations, interval, checkpoint_dir)

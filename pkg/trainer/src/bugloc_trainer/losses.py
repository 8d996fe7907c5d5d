"""Training objectives: contrastive fine-tuning and distillation losses.

The fine-tuning objective combines a mean-squared-error term on pair
scores with a supervised contrastive term, weighted alpha/beta
(defaults 0.1/0.9). Distillation transfers three kinds of last-layer
knowledge (logits, hidden states, per-head attention) and mixes the
summed distillation loss with the downstream task loss as
(1 - alpha) * task + alpha * distill, alpha defaulting to 0.9.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import Tensor

from .model import EncoderOutput

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossWeights:
    finetune_alpha: float = 0.1
    finetune_beta: float = 0.9
    kd_alpha: float = 0.9
    scl_temperature: float = 0.1

    def __post_init__(self) -> None:
        if min(self.finetune_alpha, self.finetune_beta, self.kd_alpha) < 0:
            raise ValueError("loss weights must be >= 0")
        if self.scl_temperature <= 0:
            raise ValueError("scl_temperature must be > 0")


def scl_loss(embeddings: Tensor, labels: Tensor, temperature: float = 0.1) -> Tensor:
    """Supervised contrastive loss over L2-normalized embeddings.

    Anchors without any same-class partner are excluded from the
    average; a batch where no anchor has a positive is defined as 0.
    """
    if embeddings.dim() != 2 or embeddings.shape[0] < 2:
        raise ValueError("scl_loss needs a (batch >= 2, dim) embedding matrix")
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    batch = embeddings.shape[0]
    z = F.normalize(embeddings, dim=1)
    similarity = (z @ z.T) / temperature
    eye = torch.eye(batch, dtype=torch.bool, device=embeddings.device)
    # log-softmax over all other samples for each anchor
    logits = similarity.masked_fill(eye, torch.finfo(similarity.dtype).min)
    log_prob = logits - torch.logsumexp(logits, dim=1, keepdim=True)
    positive = (labels[:, None] == labels[None, :]) & ~eye
    positives_per_anchor = positive.sum(dim=1)
    valid = positives_per_anchor > 0
    if not valid.any():
        logger.warning("scl_loss: no anchor has a positive; loss defined as 0")
        return embeddings.sum() * 0.0
    per_anchor = (log_prob * positive).sum(dim=1)[valid] / positives_per_anchor[valid]
    return -per_anchor.mean()


def pair_scores(report_embeddings: Tensor, file_embeddings: Tensor) -> Tensor:
    """Cosine of pooled report/file embeddings rescaled to [0, 1]."""
    return (1.0 + F.cosine_similarity(report_embeddings, file_embeddings, dim=-1)) / 2.0


@dataclass
class FinetuneLoss:
    total: Tensor
    mse: Tensor
    scl: Tensor


def finetune_loss(
    report_embeddings: Tensor,
    file_embeddings: Tensor,
    labels: Tensor,
    weights: LossWeights = LossWeights(),
) -> FinetuneLoss:
    """alpha * MSE(pair score, label) + beta * SCL over pair representations.

    The pair representation fed to SCL is the concatenation of the two
    pooled embeddings; its class is the 0/1 pair label.
    """
    scores = pair_scores(report_embeddings, file_embeddings)
    mse = F.mse_loss(scores, labels.to(scores.dtype))
    pair_repr = torch.cat([report_embeddings, file_embeddings], dim=-1)
    scl = scl_loss(pair_repr, labels, weights.scl_temperature)
    total = weights.finetune_alpha * mse + weights.finetune_beta * scl
    return FinetuneLoss(total=total, mse=mse, scl=scl)


@dataclass
class DistillLosses:
    prediction: Tensor
    hidden: Tensor
    attention: Tensor

    @property
    def total(self) -> Tensor:
        return self.prediction + self.hidden + self.attention


def distill_losses(teacher_out: EncoderOutput, student_out: EncoderOutput) -> DistillLosses:
    """Last-layer transfers: logits, hidden states, per-head attention MSE."""
    if teacher_out.logits.shape != student_out.logits.shape:
        raise ValueError("teacher and student logits must share a shape")
    if teacher_out.hidden.shape != student_out.hidden.shape:
        raise ValueError("teacher and student hidden states must share a shape")
    if teacher_out.attentions.shape != student_out.attentions.shape:
        raise ValueError("teacher and student attention maps must share a shape")
    prediction = F.mse_loss(student_out.logits, teacher_out.logits)
    hidden = F.mse_loss(student_out.hidden, teacher_out.hidden)
    heads = teacher_out.attentions.shape[1]
    attention = torch.stack(
        [
            F.mse_loss(student_out.attentions[:, i], teacher_out.attentions[:, i])
            for i in range(heads)
        ]
    ).mean()
    return DistillLosses(prediction=prediction, hidden=hidden, attention=attention)


def combined_kd_loss(task_loss: Tensor, distill: DistillLosses, alpha: float = 0.9) -> Tensor:
    """(1 - alpha) * task + alpha * (pred + hidden + attention)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return (1.0 - alpha) * task_loss + alpha * distill.total

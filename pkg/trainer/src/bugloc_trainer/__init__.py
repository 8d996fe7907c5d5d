"""Toy-scale fine-tuning and knowledge distillation for the retrieval encoder."""

from .data import (
    PairDataset,
    TrainingPair,
    Vocab,
    batch_indices,
    build_dataset,
    load_pairs,
    resolve_file_text,
)
from .losses import (
    DistillLosses,
    FinetuneLoss,
    LossWeights,
    combined_kd_loss,
    distill_losses,
    finetune_loss,
    pair_scores,
    scl_loss,
)
from .model import EncoderConfig, EncoderOutput, TinyEncoder, init_student, mean_pool
from .train import (
    DistillationResult,
    FinetuneResult,
    StepMetrics,
    TrainingDiverged,
    classification_accuracy,
    finetune,
    load_pretrained,
    ranking_accuracy_at_k,
    save_pretrained,
    train_student,
    write_metrics_csv,
)

__version__ = "0.1.0"

__all__ = [
    "DistillLosses",
    "DistillationResult",
    "EncoderConfig",
    "EncoderOutput",
    "FinetuneLoss",
    "FinetuneResult",
    "LossWeights",
    "PairDataset",
    "StepMetrics",
    "TinyEncoder",
    "TrainingDiverged",
    "TrainingPair",
    "Vocab",
    "batch_indices",
    "build_dataset",
    "classification_accuracy",
    "combined_kd_loss",
    "distill_losses",
    "finetune",
    "finetune_loss",
    "init_student",
    "load_pairs",
    "load_pretrained",
    "mean_pool",
    "pair_scores",
    "ranking_accuracy_at_k",
    "resolve_file_text",
    "save_pretrained",
    "scl_loss",
    "train_student",
    "write_metrics_csv",
]

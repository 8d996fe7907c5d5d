from __future__ import annotations

import json
import random
from pathlib import Path

import pytest
import torch

from bugloc_trainer import EncoderConfig, TinyEncoder, Vocab, build_dataset, load_pairs


def finite_difference_grad(fn, x: torch.Tensor, eps: float = 1e-5) -> torch.Tensor:
    """Central finite differences of a scalar function of one tensor."""
    grad = torch.zeros_like(x)
    flat = x.view(-1)
    grad_flat = grad.view(-1)
    for i in range(flat.numel()):
        original = flat[i].item()
        flat[i] = original + eps
        high = fn(x).item()
        flat[i] = original - eps
        low = fn(x).item()
        flat[i] = original
        grad_flat[i] = (high - low) / (2.0 * eps)
    return grad


def autograd_grad(fn, x: torch.Tensor) -> torch.Tensor:
    leaf = x.clone().requires_grad_(True)
    value = fn(leaf)
    value.backward()
    return leaf.grad.detach()


def assert_grad_close(fn, x: torch.Tensor, tol: float = 1e-4) -> None:
    """Max absolute and relative difference both within tolerance."""
    analytic = autograd_grad(fn, x)
    numeric = finite_difference_grad(fn, x.clone())
    abs_diff = (analytic - numeric).abs().max().item()
    scale = max(1.0, numeric.abs().max().item())
    assert abs_diff < tol, f"max abs grad diff {abs_diff:.3e}"
    assert abs_diff / scale < tol, f"relative grad diff {abs_diff / scale:.3e}"


def synthetic_pairs_ndjson(path: Path, n_bugs: int = 10, negatives_per: int = 3, seed: int = 5) -> Path:
    """Write pair records in the retrieval engine's export schema."""
    rng = random.Random(seed)
    verbs = ["crashes", "hangs", "miscounts", "leaks", "corrupts"]
    lines = []
    for b in range(n_bugs):
        target = f"src/mod{b:02d}.java"
        report = f"component mod{b:02d} {rng.choice(verbs)} when widget{b:02d} is used"
        lines.append(
            {"bug_id": f"B{b:02d}", "report_text": report, "file_path": target,
             "label": 1, "source": "ground_truth"}
        )
        others = [f"src/mod{j:02d}.java" for j in range(n_bugs) if j != b]
        for neighbor in rng.sample(others, negatives_per):
            lines.append(
                {"bug_id": f"B{b:02d}", "report_text": report, "file_path": neighbor,
                 "label": 0, "source": "similarity_negative"}
            )
    with path.open("w", encoding="utf-8") as handle:
        for line in lines:
            handle.write(json.dumps(line) + "\n")
    return path


@pytest.fixture
def toy_datasets(tmp_path):
    export = synthetic_pairs_ndjson(tmp_path / "pairs.ndjson")
    pairs = load_pairs(export)
    vocab = Vocab.build([p.report_text for p in pairs] + [p.file_path for p in pairs])
    train = build_dataset(pairs[: int(len(pairs) * 0.8)], vocab, max_len=16)
    val = build_dataset(pairs[int(len(pairs) * 0.8) :], vocab, max_len=16)
    return train, val, vocab


@pytest.fixture
def small_encoder():
    torch.manual_seed(11)
    return TinyEncoder(
        EncoderConfig(num_layers=4, hidden=32, heads=4, vocab_size=128, max_len=16)
    )

"""Acceptance criteria for the training/distillation component.

Each test prints one PASS/FAIL line (visible with ``pytest -s``); all
expected values come from independent oracles (finite differences,
truncated-forward comparison, wall-clock measurement).
"""
from __future__ import annotations

import time
from contextlib import contextmanager

import torch
import torch.nn.functional as F

from bugloc_trainer import (
    EncoderConfig,
    EncoderOutput,
    TinyEncoder,
    Vocab,
    build_dataset,
    combined_kd_loss,
    distill_losses,
    init_student,
    load_pairs,
    scl_loss,
    train_student,
)
from conftest import assert_grad_close, synthetic_pairs_ndjson


@contextmanager
def criterion(name: str):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"FAIL: {name}")
        raise
    print(f"PASS: {name} ({time.perf_counter() - started:.2f}s)")


def random_outputs(seed: int, batch=2, length=6, hidden=8, heads=2, logits=3) -> EncoderOutput:
    generator = torch.Generator().manual_seed(seed)
    attention = torch.softmax(
        torch.randn(batch, heads, length, length, generator=generator, dtype=torch.float64), dim=-1
    )
    states = torch.randn(batch, length, hidden, generator=generator, dtype=torch.float64)
    return EncoderOutput(
        logits=torch.randn(batch, logits, generator=generator, dtype=torch.float64),
        hidden=states,
        attentions=attention,
        pooled=states.mean(dim=1),
    )


def test_distillation_math():
    with criterion("distillation math: gradient checks, init equality, loss descent"):
        # gradient checks against central finite differences, 1e-4 relative
        generator = torch.Generator().manual_seed(41)
        embeddings = torch.randn(6, 5, generator=generator, dtype=torch.float64)
        labels = torch.tensor([0, 0, 1, 1, 0, 1])
        assert_grad_close(lambda x: scl_loss(x, labels, 0.1), embeddings, tol=1e-4)

        teacher = random_outputs(seed=42)

        def pred_of(x):
            return distill_losses(
                teacher,
                EncoderOutput(x, teacher.hidden, teacher.attentions, teacher.pooled),
            ).prediction

        def hidden_of(x):
            return distill_losses(
                teacher,
                EncoderOutput(teacher.logits, x, teacher.attentions, teacher.pooled),
            ).hidden

        def attention_of(x):
            return distill_losses(
                teacher,
                EncoderOutput(teacher.logits, teacher.hidden, x, teacher.pooled),
            ).attention

        def combined_of(x):
            student = EncoderOutput(x, teacher.hidden, teacher.attentions, teacher.pooled)
            task = ((x - 0.5) ** 2).mean()
            return combined_kd_loss(task, distill_losses(teacher, student), alpha=0.9)

        assert_grad_close(pred_of, random_outputs(seed=43).logits, tol=1e-4)
        assert_grad_close(hidden_of, random_outputs(seed=44).hidden, tol=1e-4)
        assert_grad_close(attention_of, random_outputs(seed=45).attentions, tol=1e-4)
        assert_grad_close(combined_of, random_outputs(seed=46).logits, tol=1e-4)

        # init_student(k=3): student forward equals teacher truncated at layer 3
        torch.manual_seed(7)
        teacher_model = TinyEncoder(
            EncoderConfig(num_layers=6, hidden=32, heads=4, vocab_size=96, max_len=16)
        )
        student_model = init_student(teacher_model, 3)
        tokens = torch.randint(3, 96, (5, 16))
        mask = torch.ones(5, 16, dtype=torch.long)
        mask[1, 9:] = 0
        teacher_out = teacher_model(tokens, mask, collect_layers=True)
        student_out = student_model(tokens, mask)
        assert torch.allclose(student_out.hidden, teacher_out.layer_hidden[2], atol=1e-6)
        assert torch.allclose(
            student_out.logits,
            teacher_model.head(student_out.pooled),
            atol=1e-6,
        )


def test_distill_loss_halves_in_200_steps(tmp_path):
    with criterion("200-step seeded toy run cuts the distillation loss by >= 50%"):
        export = synthetic_pairs_ndjson(tmp_path / "pairs.ndjson", n_bugs=10, negatives_per=3)
        pairs = load_pairs(export)
        vocab = Vocab.build([p.report_text for p in pairs] + [p.file_path for p in pairs])
        data = build_dataset(pairs, vocab, max_len=16)  # 40 pairs
        torch.manual_seed(1)
        teacher = TinyEncoder(
            EncoderConfig(num_layers=4, hidden=32, heads=4, vocab_size=len(vocab), max_len=16)
        )
        # 40 pairs x batch 8 = 5 steps/epoch; 40 epochs = 200 steps
        result = train_student(
            teacher, data, data, epochs=40, k=3, batch_size=8, lr=3e-3, seed=1
        )
        assert len(result.metrics) == 200
        first = result.metrics[0]
        last = result.metrics[-1]
        initial = first.pred_loss + first.hidden_loss + first.attention_loss
        final = last.pred_loss + last.hidden_loss + last.attention_loss
        assert final <= 0.5 * initial, f"L_distill {initial:.6f} -> {final:.6f}"


def test_student_inference_speedup():
    with criterion("3-layer student runs at <= 0.5x the 12-layer teacher's per-sample time"):
        torch.set_num_threads(1)
        torch.manual_seed(3)
        teacher = TinyEncoder(
            EncoderConfig(num_layers=12, hidden=64, heads=4, vocab_size=256, max_len=32)
        )
        student = init_student(teacher, 3)
        teacher.eval()
        student.eval()
        samples = [
            (
                torch.randint(3, 256, (1, 32)),
                torch.ones(1, 32, dtype=torch.long),
            )
            for _ in range(100)
        ]

        def measure(model) -> float:
            with torch.no_grad():
                for tokens, mask in samples[:10]:  # warmup
                    model(tokens, mask)
                started = time.perf_counter()
                for tokens, mask in samples:
                    model(tokens, mask)
                return time.perf_counter() - started

        teacher_time = measure(teacher)
        student_time = measure(student)
        ratio = student_time / teacher_time
        print(
            f"  teacher {teacher_time / 100 * 1000:.3f} ms/sample, "
            f"student {student_time / 100 * 1000:.3f} ms/sample, ratio {ratio:.2f}"
        )
        assert student_time <= 0.5 * teacher_time, f"ratio {ratio:.2f}"

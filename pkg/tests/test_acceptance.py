"""Acceptance criteria for the retrieval engine.

Each test prints one PASS/FAIL line (visible with ``pytest -s``) and
checks its stated runtime budget. Every expected value comes from an
independent reference implementation living in this file, never from
the code under test.
"""
from __future__ import annotations

import json
import math
import random
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from bugloc.cli import main
from bugloc.indexer import SourceFile, IndexerConfig, segment_file
from bugloc.ingest import BugReport
from bugloc.metrics import accuracy_at_k, average_precision, reciprocal_rank
from bugloc.negatives import file_embedding_text, generate_training_pairs
from bugloc.providers import DeterministicProvider, embed
from bugloc.ranker import rank_code_segments, rank_combined, rank_commits
from bugloc.store import EmbeddingStore, build_store
from conftest import commit_all, make_git_repo


@contextmanager
def criterion(name: str, budget_seconds: float | None = None):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"FAIL: {name}")
        raise
    elapsed = time.perf_counter() - started
    if budget_seconds is not None and elapsed >= budget_seconds:
        print(f"FAIL: {name} (took {elapsed:.2f}s, budget {budget_seconds:.0f}s)")
        raise AssertionError(f"{name} exceeded runtime budget: {elapsed:.2f}s")
    print(f"PASS: {name} ({elapsed:.2f}s)")


# --------------------------------------------------------------------------
# reference implementations (the oracles)
# --------------------------------------------------------------------------

def oracle_metrics(ranked: list[str], relevant: set[str]):
    hits = {k: (1 if set(ranked[:k]) & relevant else 0) for k in range(1, len(ranked) + 1)}
    rr = 0.0
    for i, item in enumerate(ranked):
        if item in relevant:
            rr = 1.0 / (i + 1)
            break
    found, precisions = 0, []
    for i, item in enumerate(ranked):
        if item in relevant:
            found += 1
            precisions.append(found / (i + 1))
    return hits, rr, sum(precisions) / len(relevant)


def ref_cosine(u, v) -> float:
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return sum(a * b for a, b in zip(u, v)) / (nu * nv)


def ref_top_k(query, store: EmbeddingStore, k: int):
    scored = [
        (item_id, ref_cosine([float(x) for x in store.vector_of(item_id)], query))
        for item_id in store.ids
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def ref_most_common(occurrences):
    counts, best = {}, {}
    for item, score in occurrences:
        counts[item] = counts.get(item, 0) + 1
        if item not in best or score > best[item]:
            best[item] = score
    ordered = sorted(counts, key=lambda item: (-counts[item], -best[item], item))
    return [(item, counts[item], best[item]) for item in ordered]


def ref_rank_segments(query, store, seg_to_file, k):
    top = ref_top_k(query, store, k)
    occurrences = [(seg_to_file[sid], score) for sid, score in top]
    return top, ref_most_common(occurrences)[:k]


def ref_rank_commits(query, store, commit_files, k):
    top = ref_top_k(query, store, k)
    occurrences = [
        (path, score) for cid, score in top for path in sorted(commit_files[cid])
    ]
    return top, ref_most_common(occurrences)[:k]


def ref_rank_combined(query, seg_store, com_store, seg_to_file, commit_files, k, strategy):
    seg_top = [(sid, score, "segment") for sid, score in ref_top_k(query, seg_store, k)]
    com_top = [(cid, score, "commit") for cid, score in ref_top_k(query, com_store, k)]
    if strategy == "score_merge":
        merged = sorted(seg_top + com_top, key=lambda t: (-t[1], t[0], t[2]))[:k]
    else:
        merged = seg_top + com_top
    occurrences = []
    for item_id, score, kind in merged:
        if kind == "segment":
            occurrences.append((seg_to_file[item_id], score))
        else:
            occurrences.extend((path, score) for path in sorted(commit_files[item_id]))
    return ref_most_common(occurrences)[:k]


# --------------------------------------------------------------------------
# criterion 1: metric oracle equivalence
# --------------------------------------------------------------------------

def test_metric_oracle_equivalence():
    with criterion("metric oracle equivalence (200 instances)", budget_seconds=5.0):
        rng = random.Random(20240601)
        for _ in range(200):
            n = rng.randint(1, 30)
            files = [f"f{i}" for i in range(n)]
            rng.shuffle(files)
            relevant = set(rng.sample(files, rng.randint(1, n)))
            hits, rr, ap = oracle_metrics(files, relevant)
            for k in range(1, n + 1):
                assert accuracy_at_k(files, relevant, k) == hits[k]
            assert abs(reciprocal_rank(files, relevant) - rr) < 1e-9
            assert abs(average_precision(files, relevant) - ap) < 1e-9


# --------------------------------------------------------------------------
# criterion 2: ranking brute-force equivalence
# --------------------------------------------------------------------------

def _synthetic_corpus(rng: random.Random, provider):
    common = [f"shared{j}" for j in range(24)]
    files, seg_to_file = [], {}
    segments = []
    for i in range(30):
        own = [f"w{i}x{j}" for j in range(40)]
        extra = rng.sample(common, 8)
        tokens = own + extra
        rng.shuffle(tokens)
        file = SourceFile.from_content(f"src/mod{i:02d}.java", " ".join(tokens))
        files.append(file)
        for segment in segment_file(file, IndexerConfig(seg_len=12)):
            segments.append(segment)
            seg_to_file[segment.segment_id] = segment.file_path
    assert len(segments) == 120

    commit_files = {}
    commit_items = []
    for i in range(40):
        cid = f"c{i:03d}"
        words = rng.sample(common, 3) + [f"deed{i}n{j}" for j in range(4)]
        commit_items.append((cid, " ".join(words)))
        commit_files[cid] = tuple(sorted(rng.sample([f.path for f in files], rng.randint(1, 4))))

    seg_store = build_store([(s.segment_id, s.text) for s in segments], provider)
    com_store = build_store(commit_items, provider)
    vocabulary = common + [f"w{i}x{j}" for i in range(30) for j in range(0, 40, 7)]
    queries = [" ".join(rng.sample(vocabulary, 6)) for _ in range(25)]
    return seg_store, com_store, seg_to_file, commit_files, queries


def test_ranking_brute_force_equivalence():
    with criterion(
        "ranking brute-force equivalence (30 files / 120 segments / 40 commits)",
        budget_seconds=10.0,
    ):
        rng = random.Random(77)
        provider = DeterministicProvider(dim=64)
        seg_store, com_store, seg_to_file, commit_files, queries = _synthetic_corpus(
            rng, provider
        )
        for query_text in queries:
            query = embed([query_text], provider)[0].astype(np.float64)
            query_list = [float(x) for x in query]
            for k in (1, 3, 5, 10):
                got_segments, got_files = rank_code_segments(
                    "q", query, seg_store, seg_to_file, k
                )
                ref_top, ref_files = ref_rank_segments(query_list, seg_store, seg_to_file, k)
                assert [e.item_id for e in got_segments.entries] == [i for i, _ in ref_top]
                for entry, (_, score) in zip(got_segments.entries, ref_top):
                    assert abs(entry.score - score) < 1e-9
                assert [(e.path, e.count) for e in got_files.entries] == [
                    (p, c) for p, c, _ in ref_files
                ]

                got_commits, got_cfiles = rank_commits(
                    "q", query, com_store, commit_files, k
                )
                ref_ctop, ref_cfiles = ref_rank_commits(query_list, com_store, commit_files, k)
                assert [e.item_id for e in got_commits.entries] == [i for i, _ in ref_ctop]
                assert [(e.path, e.count) for e in got_cfiles.entries] == [
                    (p, c) for p, c, _ in ref_cfiles
                ]

                for strategy in ("score_merge", "file_union"):
                    got = rank_combined(
                        "q", query, seg_store, com_store, seg_to_file, commit_files,
                        k, strategy,
                    )
                    ref = ref_rank_combined(
                        query_list, seg_store, com_store, seg_to_file, commit_files,
                        k, strategy,
                    )
                    assert [(e.path, e.count) for e in got.entries] == [
                        (p, c) for p, c, _ in ref
                    ], f"strategy={strategy} k={k}"
                    for entry, (_, _, best) in zip(got.entries, ref):
                        assert abs(entry.best_score - best) < 1e-9


# --------------------------------------------------------------------------
# criterion 3: planted-signal retrieval
# --------------------------------------------------------------------------

def test_planted_signal_retrieval():
    with criterion("planted-signal retrieval (100 queries)"):
        rng = random.Random(4242)
        provider = DeterministicProvider()
        filler = [f"noise{j}" for j in range(80)]
        files, seg_to_file, commit_files = [], {}, {}
        segments, commit_items = [], []

        def planted_identifier(i: int) -> str:
            # camelCase so the identifier contributes several file-unique
            # subtokens; overlap on them dominates any hash-collision noise
            return f"Gadget{i:03d}Repair{i:03d}Flow{i:03d}Check{i:03d}"

        for i in range(100):
            tokens = rng.sample(filler, 12) + [planted_identifier(i)] * 3
            rng.shuffle(tokens)
            file = SourceFile.from_content(f"src/g{i:03d}.java", " ".join(tokens))
            files.append(file)
            for segment in segment_file(file, IndexerConfig()):
                segments.append(segment)
                seg_to_file[segment.segment_id] = segment.file_path
            cid = f"c{i:03d}"
            commit_items.append((cid, f"touch {planted_identifier(i)} implementation"))
            commit_files[cid] = (file.path,)

        seg_store = build_store([(s.segment_id, s.text) for s in segments], provider)
        com_store = build_store(commit_items, provider)

        rank1_hits = 0
        segment_hits10 = 0
        combined_hits10 = 0
        for i in range(100):
            text = f"unexpected crash when calling {planted_identifier(i)} with invalid input"
            target = f"src/g{i:03d}.java"
            query = embed([text], provider)[0]
            _, seg_files = rank_code_segments("q", query, seg_store, seg_to_file, 10)
            ranked = [e.path for e in seg_files.entries]
            rank1_hits += int(ranked and ranked[0] == target)
            segment_hits10 += accuracy_at_k(ranked, {target}, 10) if ranked else 0
            combined = rank_combined(
                "q", query, seg_store, com_store, seg_to_file, commit_files, 10
            )
            combined_ranked = [e.path for e in combined.entries]
            combined_hits10 += accuracy_at_k(combined_ranked, {target}, 10) if combined_ranked else 0

        assert rank1_hits >= 95, f"rank-1 rate {rank1_hits}/100"
        assert combined_hits10 / 100 >= segment_hits10 / 100 - 0.05, (
            f"combined acc@10 {combined_hits10}/100 vs segment {segment_hits10}/100"
        )


# --------------------------------------------------------------------------
# criterion 4: pipeline idempotence
# --------------------------------------------------------------------------

def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()
    }


def test_pipeline_idempotence(tmp_path, capsys):
    with criterion("embedding pipeline idempotence"):
        repo = make_git_repo(tmp_path / "repo")
        tokens = [f"word{i}" for i in range(24)]  # seg_len 16 -> exactly 2 segments
        (repo / "two_seg.txt").write_text(" ".join(tokens))
        (repo / "other.txt").write_text("entirely separate tokens here")
        commit_all(repo, "initial code drop")

        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps(
                {
                    "repo_root": str(repo),
                    "store_dir": str(tmp_path / "store"),
                    "provider": {"kind": "deterministic_test", "dim": 64},
                    "seg_len": 16,
                }
            )
        )

        assert main(["--config", str(config_path), "index"]) == 0
        first = json.loads(capsys.readouterr().out)
        assert first["segments"] == 3  # 2 + 1
        state_after_first = _tree_bytes(tmp_path / "store")
        store_before = EmbeddingStore.load(tmp_path / "store/segments")

        assert main(["--config", str(config_path), "index"]) == 0
        second = json.loads(capsys.readouterr().out)
        assert second["segments_reembedded"] == 0
        assert second["commits_reembedded"] == 0
        assert _tree_bytes(tmp_path / "store") == state_after_first

        # touch one token in each half of the 2-segment file
        tokens[2] = "edited_early"
        tokens[20] = "edited_late"
        (repo / "two_seg.txt").write_text(" ".join(tokens))
        commit_all(repo, "edit both halves")

        assert main(["--config", str(config_path), "index"]) == 0
        third = json.loads(capsys.readouterr().out)
        assert third["segments_reembedded"] == 2
        store_after = EmbeddingStore.load(tmp_path / "store/segments")
        changed_rows = [
            item_id
            for item_id in store_before.ids
            if item_id in store_after
            and store_before.vector_of(item_id).tobytes()
            != store_after.vector_of(item_id).tobytes()
        ]
        assert sorted(changed_rows) == ["two_seg.txt#0", "two_seg.txt#1"]


# --------------------------------------------------------------------------
# criterion 5: negative-sampler contract
# --------------------------------------------------------------------------

def brute_force_neighbors(texts: dict[str, str], path: str, provider, top_n: int):
    vectors = {p: embed([t], provider)[0] for p, t in texts.items()}
    query = [float(x) for x in vectors[path]]
    scored = [
        (other, ref_cosine(query, [float(x) for x in vectors[other]]))
        for other in texts
        if other != path
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return [p for p, _ in scored[:top_n]]


def test_negative_sampler_contract():
    with criterion("negative-sampler contract (20 positives / 50 files)", budget_seconds=5.0):
        rng = random.Random(99)
        provider = DeterministicProvider(dim=64)
        stems = ["parse", "render", "cache", "auth", "net"]
        corpus = []
        for i in range(50):
            stem = stems[i % len(stems)]
            # varied multiplicities keep all pairwise cosines mathematically
            # distinct, so implementation and oracle agree on the ordering
            tokens = []
            for j in range(6):
                tokens += [f"{stem}Step{j}"] * rng.randint(0, 3)
            for j in range(6):
                tokens += [f"own{i}t{j}"] * rng.randint(1, 2)
            rng.shuffle(tokens)
            corpus.append(SourceFile.from_content(f"src/{stem}/f{i:02d}.java", " ".join(tokens)))

        positives = []
        for b in range(20):
            target = corpus[rng.randrange(50)].path
            positives.append(
                (
                    BugReport(
                        bug_id=f"B{b:02d}",
                        title=f"bug {b} in {target}",
                        body="observed failure",
                        ground_truth_files=frozenset({target}),
                    ),
                    target,
                )
            )

        pairs = generate_training_pairs(positives, corpus, provider, top_n=10)
        by_bug: dict[str, dict[int, list[str]]] = {}
        for pair in pairs:
            by_bug.setdefault(pair.bug_id, {}).setdefault(pair.label, []).append(pair.file_path)

        assert sum(1 for p in pairs if p.label == 1) == 20
        assert sum(1 for p in pairs if p.label == 0) == 200

        texts = {f.path: file_embedding_text(f) for f in corpus}
        for report, target in positives:
            negatives = by_bug[report.bug_id][0]
            assert target not in negatives
            assert negatives == brute_force_neighbors(texts, target, provider, 10)

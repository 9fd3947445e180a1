"""Acceptance suite: one test (and one printed pass/fail line) per
criterion. Each check is verified against an independent oracle or a
hand-computed value, never against the implementation itself."""

import json
import random
import time

import numpy as np
import pytest
from click.testing import CliRunner

from irkit.cli import main as cli_main
from irkit.corpus import Component, IssueReport, load_corpus, save_corpus
from irkit.evaluation import hits_at_k, kfold_split, mrr, seeded_shuffle
from irkit.execmodel import Action, build_model
from irkit.s2r import AtomicStep, Verdict, assess_s2rs, match_step
from irkit.solution import (
    TrainConfig, fit_logistic, metrics_from_confusion, save_model, train,
    transfer_evaluate, build_dataset, build_vocabulary,
)
from irkit.solution import ClassifierModel, ModelKind, loss_and_grad
from irkit.textproc import tokenize
from irkit.uiloc import Granularity, Ranking, build_index, fuse, rerank_code_files, score_lexical
from synthgen import (
    all_shortest_paths, enumerate_paths, gen_app, gen_comment_issues, render_path,
)
from test_uiloc import bm25_oracle, screens_from_docs


def announce(capsys, ok: bool, name: str):
    with capsys.disabled():
        print(f"{'PASS' if ok else 'FAIL'} [PRIMARY] {name}")
    assert ok


def issue_from(body: str) -> IssueReport:
    return IssueReport(id="i", app_id="a", title="t", body=body)


# ---------------------------------------------------------------------------
# 1. S2R oracle suite

def test_s2r_oracle_suite(capsys):
    started = time.monotonic()
    ok = True
    for seed in range(200):
        app = gen_app(seed, max_screens=20)
        for path in enumerate_paths(app, 6):
            report = assess_s2rs(issue_from(render_path(path, app)), app.model, app.screens)
            if not (all(a.verdict is Verdict.CORRECT for a in report.annotations)
                    and not report.missing
                    and report.final_screen == path[-1].dest_screen):
                ok = False
            # interior deletions must recover a shortest bridge, checked
            # against exhaustive BFS enumeration
            for drop in range(1, len(path) - 1):
                kept = path[:drop] + path[drop + 1:]
                rep = assess_s2rs(issue_from(render_path(kept, app)), app.model, app.screens)
                deleted = path[drop]
                oracle = all_shortest_paths(app, deleted.source_screen, deleted.dest_screen)
                if deleted.source_screen == deleted.dest_screen:
                    if rep.missing:
                        ok = False
                    continue
                if len(rep.missing) != 1:
                    ok = False
                    continue
                suggestion = rep.missing[0]
                ids = [i.id for i in suggestion.interactions]
                if ids not in oracle or ids != min(oracle):
                    ok = False
                if suggestion.insert_after != drop - 1:
                    ok = False
    elapsed = time.monotonic() - started
    ok = ok and elapsed < 30.0
    announce(capsys, ok, f"S2R oracle suite (200 apps, paths <= 6, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 2. Ambiguity injection

def test_ambiguity_injection(capsys):
    ok = True
    for seed in range(100):
        rng = random.Random(10_000 + seed)
        app = gen_app(seed)
        candidates = [i for i in app.model.interactions
                      if i.action is not Action.LAUNCH and i.target_component]
        target = rng.choice(candidates)
        screen = app.screens[target.source_screen]
        comp = screen.component_by_id(target.target_component)
        step = AtomicStep(sentence_index=0, ordinal=0, action_verb="x",
                          action=target.action, target_phrase=tokenize(comp.label))
        before = match_step(step, app.model, app.screens, target.source_screen)
        if before.verdict is not Verdict.CORRECT:
            ok = False
            continue
        # same-action sibling wearing the same label
        twin_id = f"{comp.id}_twin"
        screen.components.append(Component(id=twin_id, kind=comp.kind, label=comp.label,
                                           bounds=(0, 0, 10, 10)))
        records = app.trace_records + [{
            "action": target.action.value, "source": target.source_screen,
            "component": twin_id, "dest": rng.choice(sorted(app.model.screens)),
            **({"input": "x"} if target.action is Action.TYPE else {}),
        }]
        model = build_model(records, app.screens)
        after = match_step(step, model, app.screens, target.source_screen)
        if after.verdict is not Verdict.AMBIGUOUS:
            ok = False
    announce(capsys, ok, "Ambiguity injection (100 seeded label duplications)")


# ---------------------------------------------------------------------------
# 3. BM25 oracle equivalence

def test_bm25_oracle_equivalence(capsys):
    rng = random.Random(77)
    vocab = [f"w{i}" for i in range(60)]
    ok = True
    for _ in range(1000):
        n_docs = rng.randint(1, 50)
        docs = [[rng.choice(vocab) for _ in range(rng.randint(1, 12))] for _ in range(n_docs)]
        query = [rng.choice(vocab) for _ in range(rng.randint(1, 6))]
        index = build_index(screens_from_docs(docs), Granularity.SCREEN)
        ranking = score_lexical(query, index)
        oracle = bm25_oracle(query, docs)
        got = {doc_id: score for doc_id, score in ranking.entries}
        if any(abs(got[f"D{i:02d}"] - oracle[i]) > 1e-9 for i in range(n_docs)):
            ok = False
        oracle_order = [f"D{i:02d}" for i in
                        sorted(range(n_docs), key=lambda i: (-oracle[i], f"D{i:02d}"))]
        if [doc for doc, _ in ranking.entries] != oracle_order:
            ok = False
    announce(capsys, ok, "BM25 oracle equivalence (1000 queries within 1e-9)")


# ---------------------------------------------------------------------------
# 4. Metric identities

def test_metric_identities(capsys):
    ok = True
    rng = random.Random(5)
    for _ in range(1000):
        n = rng.randint(1, 20)
        docs = seeded_shuffle([f"d{i}" for i in range(n)], rng.randint(0, 10**6))
        ranking = Ranking("q", [(d, float(n - i)) for i, d in enumerate(docs)])
        gold = {rng.choice(docs)} if rng.random() < 0.8 else {"absent"}
        values = [hits_at_k(ranking, gold, k) for k in range(1, n + 1)]
        if values != sorted(values):
            ok = False
    pairs = []
    for rank in (1, 2, 4):
        entries = [(f"d{i}", float(9 - i)) for i in range(5)]
        pairs.append((Ranking("q", entries), {f"d{rank - 1}"}))
    if abs(mrr(pairs) - 7 / 12) > 1e-12:
        ok = False
    m = metrics_from_confusion(tp=3, fp=1, fn=2, tn=4)
    if m["precision"] != 0.75 or m["recall"] != 0.6 or m["f1"] != 2 * 0.75 * 0.6 / 1.35:
        ok = False
    announce(capsys, ok, "Metric identities (Hits@K monotone, MRR 7/12, P/R/F1 exact)")


# ---------------------------------------------------------------------------
# 5. Classifier correctness

def margin_separable(n, seed):
    """Classes separated by a gap of 1.0 along the first axis."""
    rng = random.Random(seed)
    X, y = [], []
    for _ in range(n):
        pos = rng.random() < 0.5
        x0 = rng.uniform(0.5, 1.5) if pos else rng.uniform(-1.5, -0.5)
        X.append([x0, rng.uniform(-1, 1)])
        y.append(1.0 if pos else 0.0)
    return np.array(X), np.array(y)


def test_classifier_correctness(capsys):
    ok = True
    rng = np.random.default_rng(99)
    for _ in range(100):
        n, d = int(rng.integers(4, 16)), int(rng.integers(2, 6))
        X = rng.normal(size=(n, d))
        y = (rng.random(n) > 0.5).astype(float)
        sw = rng.uniform(0.5, 2.0, size=n)
        params = rng.normal(size=d + 1)
        lam = float(rng.uniform(0, 0.1))
        _, grad = loss_and_grad(params, X, y, lam, sw)
        eps = 1e-6
        for i in range(d + 1):
            bump = np.zeros(d + 1)
            bump[i] = eps
            hi, _ = loss_and_grad(params + bump, X, y, lam, sw)
            lo, _ = loss_and_grad(params - bump, X, y, lam, sw)
            numeric = (hi - lo) / (2 * eps)
            if abs(numeric - grad[i]) > 1e-6 * max(1.0, abs(numeric)):
                ok = False

    X, y = margin_separable(200, seed=0)
    f1s = []
    for train_idx, test_idx in kfold_split(list(range(len(y))), 5, seed=0):
        w, b = fit_logistic(X[train_idx], y[train_idx], TrainConfig())
        preds = (X[test_idx] @ w + b >= 0).astype(float)
        truth = y[test_idx]
        tp = int(np.sum((preds == 1) & (truth == 1)))
        fp = int(np.sum((preds == 1) & (truth == 0)))
        fn = int(np.sum((preds == 0) & (truth == 1)))
        f1s.append(metrics_from_confusion(tp, fp, fn, len(truth) - tp - fp - fn)["f1"])
    if sum(f1s) / len(f1s) < 0.95:
        ok = False

    issues = gen_comment_issues(123, n_issues=15)
    dataset, vocab = build_dataset(issues, "p")
    blobs = []
    for _ in range(2):
        model = train(dataset, TrainConfig(seed=4), vocabulary=vocab)
        import io
        import tempfile
        import os
        fd, path = tempfile.mkstemp()
        os.close(fd)
        save_model(model, path)
        blobs.append(open(path, "rb").read())
        os.unlink(path)
    if blobs[0] != blobs[1]:
        ok = False
    announce(capsys, ok, "Classifier correctness (gradient check, 5-fold F1, determinism)")


# ---------------------------------------------------------------------------
# 6. Fusion degeneracy

def test_fusion_degeneracy(capsys):
    ok = True
    rng = random.Random(8)
    for _ in range(100):
        n = rng.randint(2, 15)
        docs = [f"d{i}" for i in range(n)]
        scores_a = seeded_shuffle([float(i) for i in range(n)], rng.randint(0, 10**6))
        scores_b = [rng.random() for _ in range(n)]
        a = Ranking("q", sorted(zip(docs, scores_a), key=lambda e: (-e[1], e[0])))
        b = Ranking("q", sorted(zip(docs, scores_b), key=lambda e: (-e[1], e[0])))
        fused = fuse([a, b], [1.0, 0.0])
        if [doc for doc, _ in fused.entries] != [doc for doc, _ in a.entries]:
            ok = False
    base = Ranking("q", [("f1", 3.0), ("f2", 2.0), ("f3", 1.0)])
    screens = Ranking("q", [("S1", 1.0), ("S2", 0.0)])
    out = rerank_code_files(base, screens, {"S1": ["f3"], "S2": ["f1"]}, gamma=0.0)
    if [doc for doc, _ in out.entries] != ["f1", "f2", "f3"]:
        ok = False
    announce(capsys, ok, "Fusion degeneracy (weights (1,0) and gamma=0 preserve order)")


# ---------------------------------------------------------------------------
# 7. Round-trip and determinism

def cli_artifacts(root, tiny_path, tmp_path, tag):
    runner = CliRunner()
    outputs = {}

    def snap(name, result, *paths):
        assert result.exit_code == 0, f"{name}: {result.output}"
        outputs[name] = result.output
        for p in paths:
            outputs[f"{name}:{p.name}"] = p.read_bytes()

    snap("validate", runner.invoke(cli_main, ["validate", str(tiny_path)]))
    out = tmp_path / f"assess-{tag}"
    snap("assess", runner.invoke(cli_main, ["assess", str(tiny_path), "issue-1",
                                            "--out", str(out)]),
         out / "report.md", out / "report.json")
    out = tmp_path / f"loc-{tag}"
    snap("localize", runner.invoke(cli_main, ["localize", str(tiny_path), "issue-1",
                                              "--out", str(out)]),
         out / "ranking.json")
    spec = tmp_path / f"clf-{tag}.json"
    spec.write_text(json.dumps({"corpus_path": str(root)}))
    out = tmp_path / f"clf-{tag}"
    snap("classify", runner.invoke(cli_main, ["classify", str(spec), "--out", str(out)]),
         out / "model.json", out / "metrics.json")
    espec = tmp_path / f"exp-{tag}.json"
    espec.write_text(json.dumps({"name": "screens", "pipeline": "UILOC_SCREEN",
                                 "corpus_path": str(tiny_path)}))
    results = tmp_path / f"res-{tag}"
    snap("evaluate", runner.invoke(cli_main, ["evaluate", str(espec), "--out", str(results)]),
         results / "screens" / "records.jsonl", results / "screens" / "aggregate.json")
    figs = tmp_path / f"figs-{tag}"
    result = runner.invoke(cli_main, ["report", str(results / "screens"), "--out", str(figs)])
    assert result.exit_code == 0, f"report: {result.output}"
    # stdout echoes absolute paths, so compare file names and bytes instead
    outputs["report"] = sorted(p.name for p in figs.iterdir())
    for p in sorted(figs.iterdir()):
        outputs[f"report:{p.name}"] = p.read_bytes()
    return outputs


def test_roundtrip_and_determinism(capsys, tiny_path, tiny_corpus, tmp_path):
    ok = True
    save_corpus(tiny_corpus, tmp_path / "copy")
    if load_corpus(tmp_path / "copy") != tiny_corpus:
        ok = False

    sol_issues = gen_comment_issues(55, n_issues=15)
    from irkit.corpus import AppData, Corpus, Screen
    sol_root = tmp_path / "sol"
    save_corpus(Corpus(apps={"synth": AppData(id="synth", screens=[Screen(id="S0", name="Main")],
                                              trace_records=[{"action": "LAUNCH", "dest": "S0"}])},
                       issues=sol_issues), sol_root)

    first = cli_artifacts(sol_root, tiny_path, tmp_path, "a")
    second = cli_artifacts(sol_root, tiny_path, tmp_path, "b")
    if set(first) != set(second) or any(first[k] != second[k] for k in first):
        ok = False
    announce(capsys, ok, "Round-trip and determinism (corpus identity, CLI byte-identical)")


# ---------------------------------------------------------------------------
# 8. Transfer harness sanity

def test_transfer_harness_sanity(capsys):
    ok = True
    for seed in range(20):
        train_issues = gen_comment_issues(seed * 2 + 1, n_issues=20)
        test_issues = gen_comment_issues(seed * 2 + 2, n_issues=20)
        vocab = build_vocabulary([c.text for i in train_issues for c in i.comments])
        train_set, _ = build_dataset(train_issues, "proj-a", vocab)
        test_set, _ = build_dataset(test_issues, "proj-b", vocab)
        zero, adapted = transfer_evaluate(train_set, test_set, 0.2, TrainConfig(),
                                          vocabulary=vocab)
        if adapted["f1"] < zero["f1"] - 0.05:
            ok = False
    announce(capsys, ok, "Transfer harness sanity (20 seeds, adapted F1 >= zero-shot - 0.05)")

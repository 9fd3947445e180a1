"""Shared evaluation harness: ranking metrics, seeded splits, and
reproducible experiment runs.

The shuffle used for fold splitting is a fixed 64-bit LCG (Knuth
MMIX constants: a=6364136223846793005, c=1442695040888963407, mod 2^64)
driving Fisher-Yates, so splits are identical across machines and
languages for the same (items, k, seed).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, load_corpus
from .errors import InvalidConfigError, TooFewItemsError
from .uiloc import Ranking

_LCG_A = 6364136223846793005
_LCG_C = 1442695040888963407
_LCG_MASK = (1 << 64) - 1


class Lcg:
    """Deterministic 64-bit linear congruential generator."""

    def __init__(self, seed: int):
        self.state = seed & _LCG_MASK

    def next(self) -> int:
        self.state = (_LCG_A * self.state + _LCG_C) & _LCG_MASK
        return self.state

    def randint(self, bound: int) -> int:
        """Uniform-ish value in [0, bound)."""
        return self.next() % bound


def seeded_shuffle(items: Sequence, seed: int) -> list:
    """Fisher-Yates with the fixed LCG; input is not mutated."""
    out = list(items)
    rng = Lcg(seed)
    for i in range(len(out) - 1, 0, -1):
        j = rng.randint(i + 1)
        out[i], out[j] = out[j], out[i]
    return out


# ---------------------------------------------------------------------------
# ranking metrics

def hits_at_k(ranking: Ranking, gold: set[str], k: int) -> int:
    """1 iff any gold id appears in the top k entries."""
    if k < 1:
        raise InvalidConfigError(f"k must be >= 1, got {k}")
    return 1 if any(doc_id in gold for doc_id, _ in ranking.entries[:k]) else 0


def reciprocal_rank(ranking: Ranking, gold: set[str]) -> float:
    for rank, (doc_id, _) in enumerate(ranking.entries, start=1):
        if doc_id in gold:
            return 1.0 / rank
    return 0.0


def mrr(pairs: Sequence[tuple[Ranking, set[str]]]) -> float:
    """Mean reciprocal rank of the first gold item; 0 when gold absent."""
    if not pairs:
        raise InvalidConfigError("mrr requires at least one query")
    return sum(reciprocal_rank(r, g) for r, g in pairs) / len(pairs)


def average_precision(ranking: Ranking, gold: set[str]) -> float:
    """AP over the full ranking; 0 for empty gold."""
    if not gold:
        return 0.0
    hits = 0
    total = 0.0
    for rank, (doc_id, _) in enumerate(ranking.entries, start=1):
        if doc_id in gold:
            hits += 1
            total += hits / rank
    return total / len(gold)


# ---------------------------------------------------------------------------
# splits

def kfold_split(items: Sequence, k: int, seed: int,
                stratify_on=None) -> list[tuple[list[int], list[int]]]:
    """Deterministic k-fold indices: list of (train, test) index lists.

    Folds are disjoint, cover everything, and differ in size by at most
    one; with ``stratify_on`` (a label function) per-fold label counts stay
    within one item of proportional.
    """
    n = len(items)
    if k < 2:
        raise InvalidConfigError(f"k must be >= 2, got {k}")
    if n < k:
        raise TooFewItemsError(f"{n} items cannot fill {k} folds")
    order = seeded_shuffle(range(n), seed)
    if stratify_on is not None:
        groups: dict = {}
        for idx in order:
            groups.setdefault(stratify_on(items[idx]), []).append(idx)
        order = [idx for key in sorted(groups, key=repr) for idx in groups[key]]
    folds: list[list[int]] = [[] for _ in range(k)]
    for cursor, idx in enumerate(order):
        folds[cursor % k].append(idx)
    result = []
    for f in range(k):
        test = sorted(folds[f])
        train = sorted(idx for g in range(k) if g != f for idx in folds[g])
        result.append((train, test))
    return result


# ---------------------------------------------------------------------------
# experiments

class Pipeline(str, Enum):
    S2R = "S2R"
    UILOC_SCREEN = "UILOC_SCREEN"
    UILOC_COMPONENT = "UILOC_COMPONENT"
    SOLUTION = "SOLUTION"
    CODE_RERANK = "CODE_RERANK"


@dataclass
class ExperimentSpec:
    name: str
    pipeline: Pipeline
    corpus_path: str
    config: dict = field(default_factory=dict)
    seed: int = 0
    k_values: list[int] = field(default_factory=lambda: [1, 3, 10])

    @staticmethod
    def from_json_file(path: str | Path) -> "ExperimentSpec":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        for key in ("name", "pipeline", "corpus_path"):
            if key not in data:
                raise InvalidConfigError(f"experiment spec missing field {key!r}")
        try:
            pipeline = Pipeline(data["pipeline"])
        except ValueError:
            raise InvalidConfigError(f"unknown pipeline {data['pipeline']!r}") from None
        k_values = data.get("k_values", [1, 3, 10])
        if any(k < 1 for k in k_values) or sorted(k_values) != k_values:
            raise InvalidConfigError(f"k_values must be positive ascending, got {k_values}")
        return ExperimentSpec(
            name=data["name"],
            pipeline=pipeline,
            corpus_path=data["corpus_path"],
            config=data.get("config", {}),
            seed=int(data.get("seed", 0)),
            k_values=list(k_values),
        )


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list[dict]
    aggregate: dict


def _hash_corpus(root: Path) -> str:
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            digest.update(str(path.relative_to(root)).encode())
            digest.update(path.read_bytes())
    return digest.hexdigest()


def _hash_config(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def _localize_config(config: dict):
    from .uiloc import LocalizeConfig
    kwargs = {}
    for key in ("k1", "b", "dense", "alpha", "gamma", "fusion", "rrf_k"):
        if key in config:
            kwargs[key] = config[key]
    if "fusion_weights" in config:
        kwargs["fusion_weights"] = tuple(config["fusion_weights"])
    return LocalizeConfig(**kwargs)


def _run_uiloc(spec: ExperimentSpec, corpus: Corpus, granularity: str) -> tuple[list[dict], dict]:
    from . import uiloc
    from .embeddings import load_embeddings_dir

    config = _localize_config(spec.config)
    store = load_embeddings_dir(spec.corpus_path) if config.dense else None
    records = []
    pairs = []
    for issue in sorted(corpus.issues, key=lambda i: i.id):
        gold = issue.gold_screen_ids if granularity == "SCREEN" else issue.gold_component_ids
        if not gold:
            continue
        app = corpus.apps[issue.app_id]
        query = uiloc.extract_ob_query(issue)
        localize = uiloc.localize_screens if granularity == "SCREEN" else uiloc.localize_components
        ranking = localize(query, app.screens, config, store=store,
                           query_key=issue.id, query_id=issue.id)
        gold_set = set(gold)
        record = {
            "item_id": issue.id,
            "ranking": [[doc_id, score] for doc_id, score in ranking.entries],
            "reciprocal_rank": reciprocal_rank(ranking, gold_set),
            "average_precision": average_precision(ranking, gold_set),
        }
        for k in spec.k_values:
            record[f"hits@{k}"] = hits_at_k(ranking, gold_set, k)
        records.append(record)
        pairs.append((ranking, gold_set))
    if not records:
        raise InvalidConfigError("no issues with gold labels for this pipeline")
    aggregate = {f"hits@{k}": sum(r[f"hits@{k}"] for r in records) / len(records)
                 for k in spec.k_values}
    aggregate["mrr"] = mrr(pairs)
    aggregate["map"] = sum(r["average_precision"] for r in records) / len(records)
    aggregate["queries"] = len(records)
    return records, aggregate


def _run_s2r(spec: ExperimentSpec, corpus: Corpus) -> tuple[list[dict], dict]:
    from . import s2r as s2r_mod
    from .execmodel import build_model

    config = s2r_mod.MatchConfig(
        tau_high=spec.config.get("tau_high", 0.75),
        tau_match=spec.config.get("tau_match", 0.5),
        delta=spec.config.get("delta", 0.1),
    )
    use_gold = bool(spec.config.get("use_gold", False))
    records = []
    counts = {"CORRECT": 0, "AMBIGUOUS": 0, "VOCAB_MISMATCH": 0, "missing": 0}
    for issue in sorted(corpus.issues, key=lambda i: i.id):
        app = corpus.apps[issue.app_id]
        if not app.trace_records:
            continue
        model = build_model(app.trace_records, {s.id: s for s in app.screens})
        screens = {s.id: s for s in app.screens}
        report = s2r_mod.assess_s2rs(issue, model, screens, config, use_gold=use_gold)
        verdicts = [a.verdict.value for a in report.annotations]
        for v in verdicts:
            counts[v] += 1
        counts["missing"] += len(report.missing)
        records.append({
            "item_id": issue.id,
            "steps": len(report.annotations),
            "verdicts": verdicts,
            "missing": len(report.missing),
            "final_screen": report.final_screen,
        })
    if not records:
        raise InvalidConfigError("no issues with traces for the S2R pipeline")
    total = sum(r["steps"] for r in records)
    aggregate = {
        "issues": len(records),
        "steps": total,
        "correct_rate": counts["CORRECT"] / total if total else 0.0,
        "ambiguous_rate": counts["AMBIGUOUS"] / total if total else 0.0,
        "mismatch_rate": counts["VOCAB_MISMATCH"] / total if total else 0.0,
        "missing_suggestions": counts["missing"],
    }
    return records, aggregate


def _run_solution(spec: ExperimentSpec, corpus: Corpus) -> tuple[list[dict], dict]:
    from . import solution as sol

    folds = int(spec.config.get("folds", 5))
    config = sol.TrainConfig(
        lam=spec.config.get("lambda", 1e-4),
        learning_rate=spec.config.get("learning_rate", 0.5),
        epochs=int(spec.config.get("epochs", 500)),
        seed=spec.seed,
    )
    labeled_issues = sorted(
        (i for i in corpus.issues if any(c.is_solution is not None for c in i.comments)),
        key=lambda i: i.id)
    if len(labeled_issues) < folds:
        raise TooFewItemsError(
            f"{len(labeled_issues)} labeled issues cannot fill {folds} folds")

    # per-issue folds avoid thread leakage between train and test
    def issue_label(issue):
        return 1 if any(c.is_solution for c in issue.comments) else 0

    splits = kfold_split(labeled_issues, folds, spec.seed, stratify_on=issue_label)
    records = []
    for fold, (train_idx, test_idx) in enumerate(splits):
        train_issues = [labeled_issues[i] for i in train_idx]
        test_issues = [labeled_issues[i] for i in test_idx]
        train_set, vocab = sol.build_dataset(train_issues, project_id="train")
        test_set, _ = sol.build_dataset(test_issues, project_id="test", vocabulary=vocab)
        model = sol.train(train_set, config, vocabulary=vocab)
        metrics = sol.evaluate(model, test_set)
        records.append({"item_id": f"fold{fold}", **metrics})
    aggregate = {
        "folds": folds,
        "precision": sum(r["precision"] for r in records) / folds,
        "recall": sum(r["recall"] for r in records) / folds,
        "f1": sum(r["f1"] for r in records) / folds,
    }
    return records, aggregate


def _run_code_rerank(spec: ExperimentSpec, corpus: Corpus) -> tuple[list[dict], dict]:
    from . import uiloc

    if corpus.code_map is None:
        raise InvalidConfigError("CODE_RERANK requires a corpus code_map.json")
    config = _localize_config(spec.config)
    base_rankings = spec.config.get("base_rankings", {})  # issue-id -> [[file, score], ...]
    all_files = sorted({f for files in corpus.code_map.values() for f in files})
    gold_files = spec.config.get("gold_files", {})  # optional issue-id -> [file, ...]
    records = []
    pairs = []
    for issue in sorted(corpus.issues, key=lambda i: i.id):
        app = corpus.apps[issue.app_id]
        query = uiloc.extract_ob_query(issue)
        screens = uiloc.localize_screens(query, app.screens, config, query_id=issue.id)
        base_entries = base_rankings.get(issue.id)
        if base_entries:
            base = uiloc.Ranking(issue.id, [(f, s) for f, s in base_entries])
        else:
            base = uiloc.Ranking(issue.id, [(f, 0.0) for f in all_files])
        reranked = uiloc.rerank_code_files(base, screens, corpus.code_map, gamma=config.gamma)
        record = {
            "item_id": issue.id,
            "ranking": [[doc_id, score] for doc_id, score in reranked.entries],
        }
        if issue.id in gold_files:
            gold_set = set(gold_files[issue.id])
            for k in spec.k_values:
                record[f"hits@{k}"] = hits_at_k(reranked, gold_set, k)
            record["reciprocal_rank"] = reciprocal_rank(reranked, gold_set)
            pairs.append((reranked, gold_set))
        records.append(record)
    aggregate = {"queries": len(records)}
    if pairs:
        aggregate["mrr"] = mrr(pairs)
        for k in spec.k_values:
            scored = [r for r in records if f"hits@{k}" in r]
            aggregate[f"hits@{k}"] = sum(r[f"hits@{k}"] for r in scored) / len(scored)
    return records, aggregate


def run_experiment(spec: ExperimentSpec, out_dir: str | Path | None = None) -> ExperimentResult:
    """Execute the named pipeline and (optionally) persist results under
    ``<out_dir>/<name>/records.jsonl`` + ``aggregate.json``."""
    corpus_root = Path(spec.corpus_path)
    corpus = load_corpus(corpus_root)
    if spec.pipeline is Pipeline.UILOC_SCREEN:
        records, aggregate = _run_uiloc(spec, corpus, "SCREEN")
    elif spec.pipeline is Pipeline.UILOC_COMPONENT:
        records, aggregate = _run_uiloc(spec, corpus, "COMPONENT")
    elif spec.pipeline is Pipeline.S2R:
        records, aggregate = _run_s2r(spec, corpus)
    elif spec.pipeline is Pipeline.SOLUTION:
        records, aggregate = _run_solution(spec, corpus)
    else:
        records, aggregate = _run_code_rerank(spec, corpus)

    aggregate = dict(aggregate)
    aggregate["corpus_hash"] = _hash_corpus(corpus_root)
    aggregate["config_hash"] = _hash_config(spec.config)
    aggregate["seed"] = spec.seed
    aggregate["pipeline"] = spec.pipeline.value

    result = ExperimentResult(spec=spec, records=records, aggregate=aggregate)
    if out_dir is not None:
        target = Path(out_dir) / spec.name
        target.mkdir(parents=True, exist_ok=True)
        lines = [json.dumps(r, sort_keys=True, ensure_ascii=False) for r in records]
        (target / "records.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
        (target / "aggregate.json").write_text(
            json.dumps(aggregate, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8")
    return result

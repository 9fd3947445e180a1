"""Buggy UI localization: BM25 lexical ranking over screens/components,
optional dense-embedding scoring, score fusion, and code-file re-ranking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .corpus import ComponentKind, IssueReport, Screen
from .embeddings import EmbeddingStore
from .errors import DimensionMismatchError, EmptyAppError, MissingKeyError, WeightMismatchError
from .s2r import FAILURE_TERMS, identify_s2r_sentences, segment_sentences
from .textproc import tokenize


class Granularity(str, Enum):
    SCREEN = "SCREEN"
    COMPONENT = "COMPONENT"


@dataclass
class UiDocument:
    doc_id: str
    granularity: Granularity
    tokens: list[str]
    parent_screen: str | None = None


@dataclass
class Index:
    documents: list[UiDocument]
    postings: dict[str, list[tuple[int, int]]]
    doc_lengths: list[int]
    avg_doc_length: float


@dataclass
class Ranking:
    query_id: str
    entries: list[tuple[str, float]] = field(default_factory=list)

    def rank_of(self, doc_id: str) -> int | None:
        """1-based rank, or None when absent."""
        for i, (did, _) in enumerate(self.entries):
            if did == doc_id:
                return i + 1
        return None


@dataclass(frozen=True)
class LocalizeConfig:
    k1: float = 1.2
    b: float = 0.75
    dense: bool = False
    fusion_weights: tuple[float, float] = (0.5, 0.5)  # (lexical, dense)
    fusion: str = "minmax"  # or "rrf"
    rrf_k: int = 60
    alpha: float = 0.7   # component vs parent-screen mix
    gamma: float = 0.3   # screen boost in code re-ranking


DEFAULT_CONFIG = LocalizeConfig()

# single searchable token per component kind
_KIND_TOKENS = {
    ComponentKind.BUTTON: "button",
    ComponentKind.TEXT_FIELD: "field",
    ComponentKind.LABEL: "label",
    ComponentKind.CHECKBOX: "checkbox",
    ComponentKind.LIST_ITEM: "list",
    ComponentKind.IMAGE: "image",
    ComponentKind.MENU_ITEM: "menu",
    ComponentKind.OTHER: "widget",
}


def _sorted_entries(scores: dict[str, float]) -> list[tuple[str, float]]:
    return sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))


# ---------------------------------------------------------------------------
# indexing

def build_index(screens: Sequence[Screen], granularity: Granularity) -> Index:
    if not screens:
        raise EmptyAppError("cannot index an app with no screens")
    documents: list[UiDocument] = []
    if granularity is Granularity.SCREEN:
        for screen in screens:
            tokens = list(tokenize(screen.name))
            for comp in screen.components:
                tokens.extend(tokenize(comp.label))
                tokens.extend(tokenize(comp.description))
            documents.append(UiDocument(screen.id, granularity, tokens))
    else:
        for screen in screens:
            for comp in screen.components:
                tokens = tokenize(comp.label) + tokenize(comp.description)
                tokens.append(_KIND_TOKENS[comp.kind])
                documents.append(UiDocument(comp.id, granularity, tokens, parent_screen=screen.id))
        if not documents:
            raise EmptyAppError("cannot index an app with no components")

    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths = []
    for ordinal, doc in enumerate(documents):
        doc_lengths.append(len(doc.tokens))
        counts: dict[str, int] = {}
        for tok in doc.tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for term in sorted(counts):
            postings.setdefault(term, []).append((ordinal, counts[term]))
    avg = sum(doc_lengths) / len(doc_lengths) if doc_lengths else 0.0
    return Index(documents=documents, postings=postings,
                 doc_lengths=doc_lengths, avg_doc_length=avg)


# ---------------------------------------------------------------------------
# scoring

def score_lexical(query: Sequence[str], index: Index,
                  config: LocalizeConfig = DEFAULT_CONFIG,
                  query_id: str = "") -> Ranking:
    """Okapi BM25 over the index; every document appears in the ranking."""
    n_docs = len(index.documents)
    scores = {doc.doc_id: 0.0 for doc in index.documents}
    k1, b = config.k1, config.b
    for term in query:
        plist = index.postings.get(term)
        if not plist:
            continue
        df = len(plist)
        idf = math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
        for ordinal, tf in plist:
            dl = index.doc_lengths[ordinal]
            norm = tf + k1 * (1.0 - b + b * dl / index.avg_doc_length)
            scores[index.documents[ordinal].doc_id] += idf * tf * (k1 + 1.0) / norm
    return Ranking(query_id=query_id, entries=_sorted_entries(scores))


def score_dense(query_vector: np.ndarray, store: EmbeddingStore,
                keys: Mapping[str, str], query_id: str = "") -> Ranking:
    """Cosine similarity between the query vector and each mapped document."""
    query_vector = np.asarray(query_vector, dtype=np.float64)
    if query_vector.shape != (store.dim,):
        raise DimensionMismatchError(
            f"query vector has shape {query_vector.shape}, store dim is {store.dim}")
    qnorm = float(np.linalg.norm(query_vector))
    scores: dict[str, float] = {}
    for doc_id in sorted(keys):
        vec = store.get(keys[doc_id])
        denom = qnorm * float(np.linalg.norm(vec))
        scores[doc_id] = float(np.dot(query_vector, vec)) / denom if denom else 0.0
    return Ranking(query_id=query_id, entries=_sorted_entries(scores))


def _minmax(ranking: Ranking) -> dict[str, float]:
    if not ranking.entries:
        return {}
    values = [s for _, s in ranking.entries]
    lo, hi = min(values), max(values)
    if hi == lo:
        return {doc_id: 0.5 for doc_id, _ in ranking.entries}
    return {doc_id: (s - lo) / (hi - lo) for doc_id, s in ranking.entries}


def fuse(rankings: Sequence[Ranking], weights: Sequence[float],
         query_id: str = "") -> Ranking:
    """Weighted sum of per-ranking min-max normalized scores."""
    if len(rankings) != len(weights):
        raise WeightMismatchError(
            f"{len(rankings)} rankings but {len(weights)} weights")
    if any(w < 0 for w in weights) or sum(weights) <= 0:
        raise WeightMismatchError("weights must be non-negative with positive sum")
    fused: dict[str, float] = {}
    for ranking, weight in zip(rankings, weights):
        normalized = _minmax(ranking)
        for doc_id in normalized:
            fused.setdefault(doc_id, 0.0)
        for doc_id, value in normalized.items():
            fused[doc_id] += weight * value
    return Ranking(query_id=query_id, entries=_sorted_entries(fused))


def fuse_rrf(rankings: Sequence[Ranking], weights: Sequence[float],
             k: int = 60, query_id: str = "") -> Ranking:
    """Reciprocal-rank fusion: score = sum_i w_i / (k + rank_i)."""
    if len(rankings) != len(weights):
        raise WeightMismatchError(
            f"{len(rankings)} rankings but {len(weights)} weights")
    fused: dict[str, float] = {}
    for ranking, weight in zip(rankings, weights):
        for rank, (doc_id, _) in enumerate(ranking.entries, start=1):
            fused[doc_id] = fused.get(doc_id, 0.0) + weight / (k + rank)
    return Ranking(query_id=query_id, entries=_sorted_entries(fused))


# ---------------------------------------------------------------------------
# query construction

def extract_ob_query(issue: IssueReport) -> list[str]:
    """Observed-behavior query tokens.

    Gold OB sentence annotations win when present; otherwise non-S2R
    sentences mentioning failure terms are used (heuristic), falling back
    to title + body.
    """
    spans = segment_sentences(issue.body)
    if issue.ob_sentences is not None:
        texts = [spans[i].text for i in issue.ob_sentences if i < len(spans)]
    else:
        s2r = set(identify_s2r_sentences(issue))
        texts = []
        for i, span in enumerate(spans):
            if i in s2r:
                continue
            words = {w.lower() for w in span.text.split()}
            words = {w.strip(".,!?;:'\"") for w in words}
            if words & FAILURE_TERMS:
                texts.append(span.text)
    if not texts:
        texts = [issue.title, issue.body]
    tokens: list[str] = []
    for text in texts:
        tokens.extend(tokenize(text))
    return tokens


# ---------------------------------------------------------------------------
# localization

def _dense_ranking(query_key: str | None, store: EmbeddingStore | None,
                   docs: Sequence[tuple[str, str | None]], query_id: str) -> Ranking | None:
    """Cosine ranking, or None when the dense path cannot run."""
    if store is None or query_key is None or query_key not in store.vectors:
        return None
    keys = {doc_id: emb_key for doc_id, emb_key in docs
            if emb_key is not None and emb_key in store.vectors}
    if not keys:
        return None
    return score_dense(store.vectors[query_key], store, keys, query_id=query_id)


def localize_screens(
    ob_text: str | Sequence[str],
    screens: Sequence[Screen],
    config: LocalizeConfig = DEFAULT_CONFIG,
    store: EmbeddingStore | None = None,
    query_key: str | None = None,
    query_id: str = "",
) -> Ranking:
    """Rank all screens against the observed-behavior text."""
    if not screens:
        raise EmptyAppError("app has no screens")
    query = tokenize(ob_text) if isinstance(ob_text, str) else list(ob_text)
    index = build_index(screens, Granularity.SCREEN)
    lexical = score_lexical(query, index, config, query_id=query_id)
    if not config.dense:
        return lexical
    dense = _dense_ranking(query_key, store,
                           [(s.id, s.embedding_key) for s in screens], query_id)
    if dense is None:
        return lexical
    if config.fusion == "rrf":
        return fuse_rrf([lexical, dense], list(config.fusion_weights),
                        k=config.rrf_k, query_id=query_id)
    return fuse([lexical, dense], list(config.fusion_weights), query_id=query_id)


def localize_components(
    ob_text: str | Sequence[str],
    screens: Sequence[Screen],
    config: LocalizeConfig = DEFAULT_CONFIG,
    store: EmbeddingStore | None = None,
    query_key: str | None = None,
    query_id: str = "",
) -> Ranking:
    """Rank all components; each score mixes the component's own lexical
    evidence with its parent screen's score (weight alpha)."""
    if not any(s.components for s in screens):
        raise EmptyAppError("app has no components")
    query = tokenize(ob_text) if isinstance(ob_text, str) else list(ob_text)
    comp_index = build_index(screens, Granularity.COMPONENT)
    comp_ranking = score_lexical(query, comp_index, config, query_id=query_id)
    if config.dense:
        docs = [(c.id, c.embedding_key) for s in screens for c in s.components]
        dense = _dense_ranking(query_key, store, docs, query_id)
        if dense is not None:
            if config.fusion == "rrf":
                comp_ranking = fuse_rrf([comp_ranking, dense], list(config.fusion_weights),
                                        k=config.rrf_k, query_id=query_id)
            else:
                comp_ranking = fuse([comp_ranking, dense], list(config.fusion_weights),
                                    query_id=query_id)

    screen_ranking = localize_screens(query, screens, config, store, query_key, query_id)
    comp_norm = _minmax(comp_ranking)
    screen_norm = _minmax(screen_ranking)
    parent = {c.id: s.id for s in screens for c in s.components}
    alpha = config.alpha
    scores = {
        cid: alpha * comp_norm.get(cid, 0.0) + (1.0 - alpha) * screen_norm.get(parent[cid], 0.0)
        for cid in parent
    }
    return Ranking(query_id=query_id, entries=_sorted_entries(scores))


def rerank_code_files(
    base: Ranking,
    screens: Ranking,
    code_map: Mapping[str, Sequence[str]],
    gamma: float = 0.3,
) -> Ranking:
    """Boost code files mapped to highly ranked screens.

    new = (1-gamma) * minmax(base) + gamma * best mapped screen's
    normalized score (0 for unmapped files).
    """
    base_norm = _minmax(base)
    screen_norm = _minmax(screens)
    file_boost: dict[str, float] = {}
    for screen_id, files in code_map.items():
        value = screen_norm.get(screen_id)
        if value is None:
            continue
        for f in files:
            file_boost[f] = max(file_boost.get(f, 0.0), value)
    scores = {
        doc_id: (1.0 - gamma) * base_norm[doc_id] + gamma * file_boost.get(doc_id, 0.0)
        for doc_id, _ in base.entries
    }
    return Ranking(query_id=base.query_id, entries=_sorted_entries(scores))

"""S2R quality assessment: segmentation, step extraction, matching,
sequential simulation against the execution model, and report rendering.

The extractor is rule-based and deterministic; pre-extracted steps (e.g.
from an external LLM) can be injected into `assess_s2rs` instead.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

from .corpus import IssueReport, Screen
from .errors import UnknownScreenError, UnreachableError, UnsupportedFormatError
from .execmodel import Action, ExecutionModel, Interaction, outgoing, shortest_interaction_path
from .textproc import token_set_f1, tokenize

# verb -> action lexicon; bigrams checked before single tokens
VERB_ACTIONS: dict[str, Action] = {
    "tap": Action.CLICK,
    "click": Action.CLICK,
    "press": Action.CLICK,
    "type": Action.TYPE,
    "enter": Action.TYPE,
    "input": Action.TYPE,
    "swipe": Action.SWIPE,
    "scroll": Action.SCROLL,
    "open": Action.LAUNCH,
    "launch": Action.LAUNCH,
    "start": Action.LAUNCH,
    "hold": Action.LONG_CLICK,
    "back": Action.BACK,
}
BIGRAM_ACTIONS: dict[tuple[str, str], Action] = {
    ("go", "back"): Action.BACK,
    ("long", "press"): Action.LONG_CLICK,
    ("long", "click"): Action.LONG_CLICK,
}

# sentences that talk about failures; used to pick OB text (see uiloc)
FAILURE_TERMS = frozenset([
    "crash", "crashes", "crashed", "crashing", "error", "errors", "fail",
    "fails", "failed", "failure", "incorrect", "incorrectly", "wrong",
    "broken", "freeze", "freezes", "frozen", "hang", "hangs", "blank",
    "exception", "unexpected",
])

_LIST_MARKER_RE = re.compile(r"^\s*(?:\d+[.)]|[-*•])\s+")
_WORD_RE = re.compile(r"[A-Za-z][A-Za-z'-]*")
_SENT_BOUNDARY_RE = re.compile(r"[.!?]+(?:\s+|$)")


class Verdict(str, Enum):
    CORRECT = "CORRECT"
    AMBIGUOUS = "AMBIGUOUS"
    VOCAB_MISMATCH = "VOCAB_MISMATCH"


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    text: str
    is_list_item: bool = False
    list_id: int | None = None


@dataclass
class AtomicStep:
    sentence_index: int
    ordinal: int
    action_verb: str
    action: Action | None  # None means the clause could not be parsed
    target_phrase: list[str] = field(default_factory=list)
    input_value: str | None = None


@dataclass
class StepAnnotation:
    step: AtomicStep
    verdict: Verdict
    candidates: list[tuple[str, float]] = field(default_factory=list)
    chosen: str | None = None


@dataclass
class MissingSuggestion:
    insert_after: int | str  # preceding step position, or "START"
    interactions: list[Interaction]


@dataclass
class QualityReport:
    issue_id: str
    annotations: list[StepAnnotation] = field(default_factory=list)
    missing: list[MissingSuggestion] = field(default_factory=list)
    final_screen: str = "UNKNOWN"


@dataclass(frozen=True)
class MatchConfig:
    tau_high: float = 0.75
    tau_match: float = 0.5
    delta: float = 0.1


DEFAULT_MATCH_CONFIG = MatchConfig()


# ---------------------------------------------------------------------------
# segmentation

def segment_sentences(text: str) -> list[Span]:
    """Split into ordered, non-overlapping sentence spans.

    Boundaries: sentence punctuation (., !, ?) and line breaks. Leading
    numbered/bulleted list markers are stripped from their spans;
    consecutive list-item lines share a ``list_id``.
    """
    spans: list[Span] = []
    offset = 0
    list_id: int | None = None
    next_list_id = 0
    prev_was_item = False
    for line in text.split("\n"):
        if not line.strip():
            prev_was_item = False
            offset += len(line) + 1
            continue
        marker = _LIST_MARKER_RE.match(line)
        is_item = marker is not None
        if is_item and not prev_was_item:
            list_id = next_list_id
            next_list_id += 1
        content_start = marker.end() if marker else 0
        content = line[content_start:]
        base = offset + content_start
        pos = 0
        for match in _SENT_BOUNDARY_RE.finditer(content):
            _add_span(spans, content, pos, match.end(), base,
                      is_item, list_id if is_item else None)
            pos = match.end()
        _add_span(spans, content, pos, len(content), base,
                  is_item, list_id if is_item else None)
        prev_was_item = is_item
        offset += len(line) + 1
    return spans


def _add_span(spans, content, start, end, base, is_item, list_id):
    raw = content[start:end]
    stripped = raw.strip()
    if not stripped:
        return
    lead = len(raw) - len(raw.lstrip())
    trail = len(raw) - len(raw.rstrip())
    spans.append(Span(
        start=base + start + lead,
        end=base + end - trail,
        text=stripped,
        is_list_item=is_item,
        list_id=list_id,
    ))


def _starts_with_action_verb(text: str) -> bool:
    words = [w.lower() for w in _WORD_RE.findall(text)]
    if not words:
        return False
    if len(words) >= 2 and (words[0], words[1]) in BIGRAM_ACTIONS:
        return True
    return words[0] in VERB_ACTIONS


def identify_s2r_sentences(issue: IssueReport, use_gold: bool = False) -> list[int]:
    """Indices of sentences judged to describe reproduction steps.

    A sentence qualifies when it begins with an imperative action verb, or
    when it belongs to a numbered/bulleted list whose majority of items do.
    """
    if use_gold and issue.s2r_sentences is not None:
        return list(issue.s2r_sentences)
    spans = segment_sentences(issue.body)
    verb_start = [_starts_with_action_verb(span.text) for span in spans]

    list_counts: dict[int, list[int]] = {}
    for i, span in enumerate(spans):
        if span.list_id is not None:
            list_counts.setdefault(span.list_id, []).append(i)
    majority_lists = {
        lid for lid, idxs in list_counts.items()
        if sum(verb_start[i] for i in idxs) * 2 > len(idxs)
    }

    result = []
    for i, span in enumerate(spans):
        if verb_start[i] or (span.list_id in majority_lists):
            result.append(i)
    return result


# ---------------------------------------------------------------------------
# step extraction

_CLAUSE_TOKEN_RE = re.compile(r"'[^']*'|\"[^\"]*\"|[A-Za-z0-9][A-Za-z0-9'_-]*|[,;]")
_COORDINATORS = {"and", "then", ",", ";"}


def _clause_action(tokens: list[str]) -> tuple[Action | None, str, int]:
    """(action, verb text, tokens consumed) for the clause head."""
    if not tokens:
        return None, "", 0
    lowered = [t.lower() for t in tokens]
    if len(lowered) >= 2 and (lowered[0], lowered[1]) in BIGRAM_ACTIONS:
        return BIGRAM_ACTIONS[(lowered[0], lowered[1])], f"{lowered[0]} {lowered[1]}", 2
    if lowered[0] in VERB_ACTIONS:
        return VERB_ACTIONS[lowered[0]], lowered[0], 1
    return None, tokens[0].lower(), 0


def extract_atomic_steps(sentence: str, sentence_index: int) -> list[AtomicStep]:
    """Split a sentence into atomic steps at coordinators between
    action-verb clauses; unparseable clauses yield action ``None``.
    """
    tokens = _CLAUSE_TOKEN_RE.findall(sentence)
    clauses: list[list[str]] = [[]]
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.lower() in _COORDINATORS:
            # split only if the clause after the coordinator run heads an action verb
            j = i + 1
            while j < len(tokens) and tokens[j].lower() in _COORDINATORS:
                j += 1
            action, _, consumed = _clause_action(tokens[j:])
            if action is not None and consumed > 0 and clauses[-1]:
                clauses.append([])
                i = j
                continue
            if tok not in (",", ";"):
                clauses[-1].append(tok)
            i += 1
            continue
        clauses[-1].append(tok)
        i += 1

    steps: list[AtomicStep] = []
    for clause in clauses:
        if not clause:
            continue
        action, verb, consumed = _clause_action(clause)
        rest = clause[consumed:]
        input_value: str | None = None
        target_tokens: list[str] = []
        for tok in rest:
            if tok[:1] in "'\"" and tok[-1:] == tok[:1]:
                if action is Action.TYPE and input_value is None:
                    input_value = tok[1:-1]
                else:
                    target_tokens.extend(tokenize(tok[1:-1]))
            else:
                target_tokens.extend(tokenize(tok))
        if action in (Action.BACK, Action.LAUNCH):
            # targetless actions; generic objects ("the app") carry no signal
            target_tokens = []
        steps.append(AtomicStep(
            sentence_index=sentence_index,
            ordinal=len(steps),
            action_verb=verb,
            action=action,
            target_phrase=target_tokens,
            input_value=input_value,
        ))
    return steps


# ---------------------------------------------------------------------------
# matching and simulation

def _interaction_tokens(inter: Interaction, screens: Mapping[str, Screen]) -> set[str]:
    if inter.target_component is None:
        return set()
    screen = screens.get(inter.source_screen)
    comp = screen.component_by_id(inter.target_component) if screen else None
    if comp is None:
        return set()
    return set(tokenize(comp.label)) | set(tokenize(comp.description))


def step_similarity(step: AtomicStep, inter: Interaction, screens: Mapping[str, Screen]) -> float:
    """Token-set F1 between the step target and the interaction's component
    text; 1.0 for targetless BACK/LAUNCH pairs."""
    step_tokens = set(step.target_phrase)
    inter_tokens = _interaction_tokens(inter, screens)
    if not step_tokens and not inter_tokens and step.action in (Action.BACK, Action.LAUNCH):
        return 1.0
    return token_set_f1(step_tokens, inter_tokens)


def match_step(
    step: AtomicStep,
    model: ExecutionModel,
    screens: Mapping[str, Screen],
    current_screen: str,
    config: MatchConfig = DEFAULT_MATCH_CONFIG,
) -> StepAnnotation:
    """Match one step against the model, locality first.

    Candidates are the action-compatible interactions leaving the current
    screen; if none reaches tau_match the search widens to the whole model.
    """
    if current_screen not in model.screens:
        raise UnknownScreenError(f"screen {current_screen!r} not in model")
    if step.action is None:
        return StepAnnotation(step=step, verdict=Verdict.VOCAB_MISMATCH)

    local = [i for i in outgoing(model, current_screen) if i.action == step.action]
    scored = [(i, step_similarity(step, i, screens)) for i in local]
    if not any(s >= config.tau_match for _, s in scored):
        pool = [i for i in model.interactions if i.action == step.action]
        scored = [(i, step_similarity(step, i, screens)) for i in pool]
    scored.sort(key=lambda pair: (-pair[1], pair[0].id))
    candidates = [(i.id, s) for i, s in scored]

    if not scored or scored[0][1] < config.tau_match:
        return StepAnnotation(step=step, verdict=Verdict.VOCAB_MISMATCH, candidates=candidates)
    best = scored[0][1]
    second = scored[1][1] if len(scored) > 1 else 0.0
    if best >= config.tau_high and (best - second) > config.delta:
        verdict = Verdict.CORRECT
    else:
        verdict = Verdict.AMBIGUOUS
    return StepAnnotation(step=step, verdict=verdict, candidates=candidates,
                          chosen=scored[0][0].id)


def assess_s2rs(
    issue: IssueReport,
    model: ExecutionModel,
    screens: Mapping[str, Screen],
    config: MatchConfig = DEFAULT_MATCH_CONFIG,
    use_gold: bool = False,
    steps: Sequence[AtomicStep] | None = None,
) -> QualityReport:
    """Sequentially simulate the reported steps from the launch screen.

    A matched step whose interaction starts elsewhere triggers a
    missing-step suggestion (the shortest bridging path) and the simulation
    then advances to the interaction's destination. Unmatched steps leave
    the simulated screen unchanged.
    """
    if steps is None:
        spans = segment_sentences(issue.body)
        step_list: list[AtomicStep] = []
        for idx in identify_s2r_sentences(issue, use_gold=use_gold):
            step_list.extend(extract_atomic_steps(spans[idx].text, idx))
    else:
        step_list = list(steps)

    annotations: list[StepAnnotation] = []
    missing: list[MissingSuggestion] = []
    current = model.launch_screen
    for pos, step in enumerate(step_list):
        ann = match_step(step, model, screens, current, config)
        annotations.append(ann)
        if ann.chosen is not None:
            inter = model.interaction_by_id(ann.chosen)
            if inter.source_screen != current:
                try:
                    bridge = shortest_interaction_path(model, current, inter.source_screen)
                except UnreachableError:
                    bridge = []
                if bridge:
                    missing.append(MissingSuggestion(
                        insert_after="START" if pos == 0 else pos - 1,
                        interactions=bridge,
                    ))
            current = inter.dest_screen
    return QualityReport(
        issue_id=issue.id,
        annotations=annotations,
        missing=missing,
        final_screen=current,
    )


# ---------------------------------------------------------------------------
# external-extractor adapter

def parse_steps_json(text: str) -> list[AtomicStep]:
    """Read pre-extracted steps (JSON list) from an external extractor."""
    records = json.loads(text)
    steps = []
    for i, rec in enumerate(records):
        action = rec.get("action")
        steps.append(AtomicStep(
            sentence_index=int(rec.get("sentence_index", 0)),
            ordinal=int(rec.get("ordinal", i)),
            action_verb=rec.get("action_verb", ""),
            action=None if action in (None, "UNKNOWN") else Action(action),
            target_phrase=list(rec.get("target_phrase", [])),
            input_value=rec.get("input_value"),
        ))
    return steps


# ---------------------------------------------------------------------------
# rendering

def _interaction_label(inter: Interaction, screens: Mapping[str, Screen] | None) -> str:
    if inter.target_component is None or screens is None:
        return inter.target_component or "-"
    screen = screens.get(inter.source_screen)
    comp = screen.component_by_id(inter.target_component) if screen else None
    if comp is None or not (comp.label or comp.description):
        return inter.target_component
    return comp.label or comp.description


def _interaction_line(inter: Interaction, screens: Mapping[str, Screen] | None) -> str:
    label = _interaction_label(inter, screens)
    return (f"{inter.id} {inter.action.value} [{label}] "
            f"({inter.source_screen} -> {inter.dest_screen})")


def render_report(
    report: QualityReport,
    format: str = "markdown",
    screens: Mapping[str, Screen] | None = None,
) -> str:
    """Render the quality report as markdown or JSON (both deterministic)."""
    if format == "json":
        return _report_to_json(report)
    if format != "markdown":
        raise UnsupportedFormatError(f"unsupported report format {format!r}")

    lines = [f"# S2R quality report: {report.issue_id}", ""]
    lines.append(f"Final screen: {report.final_screen}")
    lines.append("")
    lines.append("## Steps")
    if not report.annotations:
        lines.append("")
        lines.append("No reproduction steps found.")
    for pos, ann in enumerate(report.annotations):
        step = ann.step
        action = step.action.value if step.action is not None else "UNKNOWN"
        target = " ".join(step.target_phrase) or "-"
        lines.append("")
        lines.append(f"### Step {pos} (sentence {step.sentence_index}, ordinal {step.ordinal})")
        lines.append(f"- action: {action} (`{step.action_verb}`)")
        lines.append(f"- target: {target}")
        if step.input_value is not None:
            lines.append(f"- input: {step.input_value!r}")
        lines.append(f"- verdict: {ann.verdict.value}")
        if ann.candidates:
            rendered = ", ".join(f"{cid} ({score:.3f})" for cid, score in ann.candidates)
            lines.append(f"- candidates: {rendered}")
        if ann.chosen is not None:
            lines.append(f"- chosen: {ann.chosen}")
    lines.append("")
    lines.append("## Missing steps")
    if not report.missing:
        lines.append("")
        lines.append("None.")
    for suggestion in report.missing:
        lines.append("")
        lines.append(f"### Insert after: {suggestion.insert_after}")
        for inter in suggestion.interactions:
            lines.append(f"- {_interaction_line(inter, screens)}")
    return "\n".join(lines) + "\n"


def _step_to_json(step: AtomicStep) -> dict:
    return {
        "sentence_index": step.sentence_index,
        "ordinal": step.ordinal,
        "action_verb": step.action_verb,
        "action": step.action.value if step.action is not None else "UNKNOWN",
        "target_phrase": step.target_phrase,
        "input_value": step.input_value,
    }


def _interaction_to_json(inter: Interaction) -> dict:
    return {
        "id": inter.id,
        "action": inter.action.value,
        "source_screen": inter.source_screen,
        "target_component": inter.target_component,
        "dest_screen": inter.dest_screen,
        "input_value": inter.input_value,
    }


def _report_to_json(report: QualityReport) -> str:
    data = {
        "issue_id": report.issue_id,
        "final_screen": report.final_screen,
        "annotations": [{
            "step": _step_to_json(ann.step),
            "verdict": ann.verdict.value,
            "candidates": [[cid, score] for cid, score in ann.candidates],
            "chosen": ann.chosen,
        } for ann in report.annotations],
        "missing": [{
            "insert_after": s.insert_after,
            "interactions": [_interaction_to_json(i) for i in s.interactions],
        } for s in report.missing],
    }
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def report_from_json(text: str) -> QualityReport:
    data = json.loads(text)
    annotations = []
    for rec in data["annotations"]:
        s = rec["step"]
        step = AtomicStep(
            sentence_index=s["sentence_index"],
            ordinal=s["ordinal"],
            action_verb=s["action_verb"],
            action=None if s["action"] == "UNKNOWN" else Action(s["action"]),
            target_phrase=list(s["target_phrase"]),
            input_value=s["input_value"],
        )
        annotations.append(StepAnnotation(
            step=step,
            verdict=Verdict(rec["verdict"]),
            candidates=[(c[0], c[1]) for c in rec["candidates"]],
            chosen=rec["chosen"],
        ))
    missing = [MissingSuggestion(
        insert_after=rec["insert_after"],
        interactions=[Interaction(
            id=i["id"],
            action=Action(i["action"]),
            source_screen=i["source_screen"],
            target_component=i["target_component"],
            dest_screen=i["dest_screen"],
            input_value=i["input_value"],
        ) for i in rec["interactions"]],
    ) for rec in data["missing"]]
    return QualityReport(
        issue_id=data["issue_id"],
        annotations=annotations,
        missing=missing,
        final_screen=data["final_screen"],
    )

"""Shared corpus model: issues, app UI metadata, traces, and gold labels.

On-disk layout (all JSON files carry ``format_version: 1``)::

    <root>/apps/<app-id>/app.json       screens + components
    <root>/apps/<app-id>/traces.jsonl   observed interaction events
    <root>/issues/<issue-id>.json       one issue report per file
    <root>/code_map.json                optional screen/component -> code files
    <root>/embeddings/*.emb             optional dense vectors (see embeddings)

Serialization is canonical: sorted keys, two-space indent, trailing
newline. Saving the same corpus twice produces byte-identical files.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import (
    DanglingRefError,
    DuplicateIdError,
    IoFailureError,
    MalformedFileError,
    ValidationError,
)

FORMAT_VERSION = 1

ID_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


class ComponentKind(str, Enum):
    BUTTON = "BUTTON"
    TEXT_FIELD = "TEXT_FIELD"
    LABEL = "LABEL"
    CHECKBOX = "CHECKBOX"
    LIST_ITEM = "LIST_ITEM"
    IMAGE = "IMAGE"
    MENU_ITEM = "MENU_ITEM"
    OTHER = "OTHER"


@dataclass
class Component:
    id: str
    kind: ComponentKind
    label: str = ""
    description: str = ""
    bounds: tuple[int, int, int, int] = (0, 0, 0, 0)
    embedding_key: str | None = None


@dataclass
class Screen:
    id: str
    name: str
    components: list[Component] = field(default_factory=list)
    embedding_key: str | None = None

    def component_by_id(self, component_id: str) -> Component | None:
        for c in self.components:
            if c.id == component_id:
                return c
        return None


@dataclass
class Comment:
    id: str
    author: str
    timestamp: int
    text: str
    is_solution: bool | None = None


@dataclass
class IssueReport:
    id: str
    app_id: str
    title: str
    body: str
    comments: list[Comment] = field(default_factory=list)
    reporter: str | None = None
    ob_sentences: list[int] | None = None
    eb_sentences: list[int] | None = None
    s2r_sentences: list[int] | None = None
    gold_screen_ids: list[str] | None = None
    gold_component_ids: list[str] | None = None


@dataclass
class AppData:
    id: str
    screens: list[Screen] = field(default_factory=list)
    trace_records: list[dict] = field(default_factory=list)

    def screen_by_id(self, screen_id: str) -> Screen | None:
        for s in self.screens:
            if s.id == screen_id:
                return s
        return None


@dataclass
class Corpus:
    apps: dict[str, AppData] = field(default_factory=dict)
    issues: list[IssueReport] = field(default_factory=list)
    code_map: dict[str, list[str]] | None = None

    def issue_by_id(self, issue_id: str) -> IssueReport | None:
        for issue in self.issues:
            if issue.id == issue_id:
                return issue
        return None


@dataclass
class Violation:
    entity_id: str
    rule: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_text(self) -> str:
        if self.ok:
            return "OK: no violations\n"
        lines = [f"{v.rule}\t{v.entity_id}\t{v.message}" for v in self.violations]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validation

def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Check every corpus invariant; violations are data, not errors."""
    out: list[Violation] = []

    def bad(entity_id, rule, message):
        out.append(Violation(entity_id, rule, message))

    for app_id, app in corpus.apps.items():
        if not ID_RE.match(app_id):
            bad(app_id, "BAD_ID", "app id must match [A-Za-z0-9_.-]+")
        seen_screens: set[str] = set()
        for screen in app.screens:
            if screen.id in seen_screens:
                bad(screen.id, "DUPLICATE_ID", f"duplicate screen id in app {app_id}")
            seen_screens.add(screen.id)
            if not ID_RE.match(screen.id):
                bad(screen.id, "BAD_ID", "screen id must match [A-Za-z0-9_.-]+")
            seen_components: set[str] = set()
            for comp in screen.components:
                if comp.id in seen_components:
                    bad(comp.id, "DUPLICATE_ID", f"duplicate component id in screen {screen.id}")
                seen_components.add(comp.id)
                left, top, right, bottom = comp.bounds
                if left > right or top > bottom:
                    bad(comp.id, "BOUNDS", f"invalid bounds {comp.bounds}")
                if not isinstance(comp.kind, ComponentKind):
                    bad(comp.id, "BAD_KIND", f"unknown component kind {comp.kind!r}")

    seen_issues: set[str] = set()
    for issue in corpus.issues:
        if not issue.id:
            bad("<empty>", "BAD_ID", "issue id must be non-empty")
            continue
        if issue.id in seen_issues:
            bad(issue.id, "DUPLICATE_ID", "duplicate issue id")
        seen_issues.add(issue.id)
        app = corpus.apps.get(issue.app_id)
        if app is None:
            bad(issue.id, "DANGLING_REF", f"issue references unknown app {issue.app_id!r}")
            continue
        screen_ids = {s.id for s in app.screens}
        component_ids = {c.id for s in app.screens for c in s.components}
        for sid in issue.gold_screen_ids or []:
            if sid not in screen_ids:
                bad(issue.id, "DANGLING_REF", f"gold screen {sid!r} not in app {issue.app_id}")
        for cid in issue.gold_component_ids or []:
            if cid not in component_ids:
                bad(issue.id, "DANGLING_REF", f"gold component {cid!r} not in app {issue.app_id}")
        seen_comments: set[str] = set()
        prev: Comment | None = None
        for comment in issue.comments:
            if comment.id in seen_comments:
                bad(comment.id, "DUPLICATE_ID", f"duplicate comment id in issue {issue.id}")
            seen_comments.add(comment.id)
            if not comment.text:
                bad(comment.id, "EMPTY_TEXT", "comment text must be non-empty")
            if prev is not None and comment.timestamp < prev.timestamp:
                bad(comment.id, "COMMENT_ORDER", "comments not ordered by timestamp")
            prev = comment

    return ValidationReport(out)


# ---------------------------------------------------------------------------
# load / save

def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _read_json(path: Path) -> dict:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFileError(f"{path}:{exc.lineno}: {exc.msg}") from exc


def _check_version(data: dict, path: Path) -> None:
    if data.get("format_version") != FORMAT_VERSION:
        raise MalformedFileError(
            f"{path}:1: expected format_version {FORMAT_VERSION}, "
            f"got {data.get('format_version')!r}"
        )


def _component_from_json(data: dict, path: Path) -> Component:
    try:
        kind = ComponentKind(data.get("kind", "OTHER"))
    except ValueError as exc:
        raise MalformedFileError(f"{path}: unknown component kind {data.get('kind')!r}") from exc
    bounds = data.get("bounds", [0, 0, 0, 0])
    if len(bounds) != 4:
        raise MalformedFileError(f"{path}: component bounds must have 4 entries")
    return Component(
        id=data["id"],
        kind=kind,
        label=data.get("label", ""),
        description=data.get("description", ""),
        bounds=tuple(int(v) for v in bounds),
        embedding_key=data.get("embedding_key"),
    )


def load_corpus(path: str | Path, validate: bool = True) -> Corpus:
    """Load, cross-check, and return a fully validated corpus.

    With ``validate=False`` invariant violations are left in the data for
    the caller to inspect via ``validate_corpus`` (parse errors still
    raise).
    """
    root = Path(path)
    if not root.is_dir():
        raise IoFailureError(f"{root}: not a directory")

    corpus = Corpus()
    apps_dir = root / "apps"
    if apps_dir.is_dir():
        for app_dir in sorted(p for p in apps_dir.iterdir() if p.is_dir()):
            app_json = app_dir / "app.json"
            data = _read_json(app_json)
            _check_version(data, app_json)
            app_id = data.get("id", app_dir.name)
            if app_id != app_dir.name:
                raise MalformedFileError(f"{app_json}: app id {app_id!r} does not match directory")
            if app_id in corpus.apps:
                raise DuplicateIdError(f"duplicate app id {app_id!r}")
            screens = []
            for sdata in data.get("screens", []):
                try:
                    screens.append(Screen(
                        id=sdata["id"],
                        name=sdata.get("name", ""),
                        components=[_component_from_json(c, app_json) for c in sdata.get("components", [])],
                        embedding_key=sdata.get("embedding_key"),
                    ))
                except KeyError as exc:
                    raise MalformedFileError(f"{app_json}: screen missing field {exc}") from exc
            app = AppData(id=app_id, screens=screens)
            traces_path = app_dir / "traces.jsonl"
            if traces_path.exists():
                for lineno, line in enumerate(
                        traces_path.read_text(encoding="utf-8").splitlines(), start=1):
                    if not line.strip():
                        continue
                    try:
                        app.trace_records.append(json.loads(line))
                    except json.JSONDecodeError as exc:
                        raise MalformedFileError(f"{traces_path}:{lineno}: {exc.msg}") from exc
            corpus.apps[app_id] = app

    issues_dir = root / "issues"
    if issues_dir.is_dir():
        for issue_path in sorted(issues_dir.glob("*.json")):
            data = _read_json(issue_path)
            _check_version(data, issue_path)
            try:
                comments = [Comment(
                    id=c["id"],
                    author=c.get("author", ""),
                    timestamp=int(c["timestamp"]),
                    text=c.get("text", ""),
                    is_solution=c.get("is_solution"),
                ) for c in data.get("comments", [])]
                issue = IssueReport(
                    id=data["id"],
                    app_id=data["app_id"],
                    title=data.get("title", ""),
                    body=data.get("body", ""),
                    comments=comments,
                    reporter=data.get("reporter"),
                    ob_sentences=data.get("ob_sentences"),
                    eb_sentences=data.get("eb_sentences"),
                    s2r_sentences=data.get("s2r_sentences"),
                    gold_screen_ids=data.get("gold_screen_ids"),
                    gold_component_ids=data.get("gold_component_ids"),
                )
            except KeyError as exc:
                raise MalformedFileError(f"{issue_path}: missing field {exc}") from exc
            corpus.issues.append(issue)

    code_map_path = root / "code_map.json"
    if code_map_path.exists():
        data = _read_json(code_map_path)
        _check_version(data, code_map_path)
        corpus.code_map = {k: list(v) for k, v in data.get("map", {}).items()}

    if not validate:
        return corpus
    report = validate_corpus(corpus)
    for v in report.violations:
        if v.rule == "DANGLING_REF":
            raise DanglingRefError(f"{v.entity_id}: {v.message}")
        if v.rule == "DUPLICATE_ID":
            raise DuplicateIdError(f"{v.entity_id}: {v.message}")
    if not report.ok:
        v = report.violations[0]
        raise ValidationError(f"{v.rule} {v.entity_id}: {v.message}")
    return corpus


def _component_to_json(comp: Component) -> dict:
    data = {
        "id": comp.id,
        "kind": comp.kind.value,
        "label": comp.label,
        "description": comp.description,
        "bounds": list(comp.bounds),
    }
    if comp.embedding_key is not None:
        data["embedding_key"] = comp.embedding_key
    return data


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus in canonical form; validates first."""
    report = validate_corpus(corpus)
    if not report.ok:
        v = report.violations[0]
        raise ValidationError(f"{v.rule} {v.entity_id}: {v.message}")

    root = Path(path)
    try:
        root.mkdir(parents=True, exist_ok=True)
        for app_id in sorted(corpus.apps):
            app = corpus.apps[app_id]
            app_dir = root / "apps" / app_id
            app_dir.mkdir(parents=True, exist_ok=True)
            screens = []
            for screen in app.screens:
                sdata = {
                    "id": screen.id,
                    "name": screen.name,
                    "components": [_component_to_json(c) for c in screen.components],
                }
                if screen.embedding_key is not None:
                    sdata["embedding_key"] = screen.embedding_key
                screens.append(sdata)
            (app_dir / "app.json").write_text(
                _canonical_json({"format_version": FORMAT_VERSION, "id": app_id, "screens": screens}),
                encoding="utf-8",
            )
            if app.trace_records:
                lines = [json.dumps(r, sort_keys=True, ensure_ascii=False) for r in app.trace_records]
                (app_dir / "traces.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
        if corpus.issues:
            issues_dir = root / "issues"
            issues_dir.mkdir(parents=True, exist_ok=True)
            for issue in corpus.issues:
                data = {
                    "format_version": FORMAT_VERSION,
                    "id": issue.id,
                    "app_id": issue.app_id,
                    "title": issue.title,
                    "body": issue.body,
                    "comments": [],
                }
                for c in issue.comments:
                    cdata = {"id": c.id, "author": c.author, "timestamp": c.timestamp, "text": c.text}
                    if c.is_solution is not None:
                        cdata["is_solution"] = c.is_solution
                    data["comments"].append(cdata)
                for key in ("reporter", "ob_sentences", "eb_sentences", "s2r_sentences",
                            "gold_screen_ids", "gold_component_ids"):
                    value = getattr(issue, key)
                    if value is not None:
                        data[key] = value
                (issues_dir / f"{issue.id}.json").write_text(_canonical_json(data), encoding="utf-8")
        if corpus.code_map is not None:
            (root / "code_map.json").write_text(
                _canonical_json({"format_version": FORMAT_VERSION, "map": corpus.code_map}),
                encoding="utf-8",
            )
    except OSError as exc:
        raise IoFailureError(f"{root}: {exc}") from exc

"""Seeded synthetic apps, step texts, and comment datasets for tests.

Generated apps have globally unique two-word component labels so a
faithfully rendered path matches its interactions one-to-one; tests rely
on that to know the expected verdicts in advance.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from irkit.corpus import AppData, Comment, Component, ComponentKind, IssueReport, Screen
from irkit.execmodel import Action, ExecutionModel, Interaction, build_model

_SYLLABLES = ["ba", "ce", "di", "fo", "gu", "ha", "ki", "lo", "mu", "ne",
              "pa", "qi", "ro", "su", "tu", "ve", "wo", "xa", "yu", "zo"]


def make_word(rng: random.Random) -> str:
    return "".join(rng.choice(_SYLLABLES) for _ in range(3))


class WordPool:
    """Hands out words never seen before within one app."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used: set[str] = set()

    def fresh(self) -> str:
        while True:
            word = make_word(self.rng)
            if word not in self.used:
                self.used.add(word)
                return word


@dataclass
class SynthApp:
    screens: dict[str, Screen]
    trace_records: list[dict]
    model: ExecutionModel


def gen_app(seed: int, max_screens: int = 20) -> SynthApp:
    """Random app: a reachability chain from the launch screen plus extra
    edges; every interaction gets its own uniquely labeled component."""
    rng = random.Random(seed)
    pool = WordPool(rng)
    n = rng.randint(4, max_screens)
    screens = {f"S{i:02d}": Screen(id=f"S{i:02d}", name=pool.fresh(), components=[])
               for i in range(n)}
    ids = sorted(screens)

    records = [{"action": "LAUNCH", "dest": ids[0]}]

    def add_edge(src: str, dst: str):
        action = rng.choice([Action.CLICK, Action.CLICK, Action.TYPE, Action.LONG_CLICK])
        comp_id = f"c{len(pool.used):03d}_{src}"
        kind = ComponentKind.TEXT_FIELD if action is Action.TYPE else ComponentKind.BUTTON
        label = f"{pool.fresh()} {pool.fresh()}"
        screens[src].components.append(Component(id=comp_id, kind=kind, label=label,
                                                 bounds=(0, 0, 10, 10)))
        record = {"action": action.value, "source": src, "component": comp_id, "dest": dst}
        if action is Action.TYPE:
            record["input"] = "x"
        records.append(record)

    for i in range(n - 1):
        add_edge(ids[i], ids[i + 1])
    extra = rng.randint(0, n // 2)
    for _ in range(extra):
        src = rng.choice(ids)
        dst = rng.choice(ids)
        add_edge(src, dst)

    model = build_model(records, screens)
    return SynthApp(screens=screens, trace_records=records, model=model)


def step_text(inter: Interaction, app: SynthApp) -> str:
    comp = app.screens[inter.source_screen].component_by_id(inter.target_component)
    if inter.action is Action.CLICK:
        return f"Tap {comp.label}."
    if inter.action is Action.TYPE:
        return f"Type 'x' in the {comp.label}."
    if inter.action is Action.LONG_CLICK:
        return f"Long press {comp.label}."
    raise AssertionError(f"no template for {inter.action}")


def render_path(path: list[Interaction], app: SynthApp) -> str:
    return "\n".join(step_text(inter, app) for inter in path)


def enumerate_paths(app: SynthApp, max_len: int) -> list[list[Interaction]]:
    """All interaction paths from the launch screen, skipping the LAUNCH
    self-loop, up to max_len steps."""
    paths: list[list[Interaction]] = []

    def walk(screen: str, prefix: list[Interaction]):
        if prefix:
            paths.append(list(prefix))
        if len(prefix) == max_len:
            return
        for inter in app.model.adjacency[screen]:
            if inter.action is Action.LAUNCH:
                continue
            prefix.append(inter)
            walk(inter.dest_screen, prefix)
            prefix.pop()

    walk(app.model.launch_screen, [])
    return paths


def all_shortest_paths(app: SynthApp, src: str, dst: str) -> list[list[str]]:
    """Brute-force enumeration of shortest interaction-id paths by BFS
    level expansion; independent of the library's path search."""
    if src == dst:
        return [[]]
    frontier: list[tuple[str, list[str]]] = [(src, [])]
    visited_depth = {src: 0}
    depth = 0
    while frontier:
        depth += 1
        nxt: list[tuple[str, list[str]]] = []
        found: list[list[str]] = []
        for screen, path in frontier:
            for inter in app.model.adjacency[screen]:
                new_path = path + [inter.id]
                if inter.dest_screen == dst:
                    found.append(new_path)
                elif visited_depth.get(inter.dest_screen, depth) >= depth:
                    visited_depth[inter.dest_screen] = depth
                    nxt.append((inter.dest_screen, new_path))
        if found:
            return found
        frontier = nxt
    return []


# ---------------------------------------------------------------------------
# synthetic comment datasets

_SOLUTION_PHRASES = [
    "fixed by clearing the cache",
    "the patch resolves the null pointer",
    "apply this change to the settings loader",
    "root cause is the stale session token",
    "workaround is to disable the sync job",
]
_NOISE_PHRASES = [
    "i can reproduce this on my device",
    "same problem here after the update",
    "any news on this issue",
    "thanks for reporting, looking into it",
    "duplicate of an older ticket maybe",
]


def gen_comment_issues(seed: int, n_issues: int = 30) -> list[IssueReport]:
    """Issues whose positive comments share a solution vocabulary; used
    for classifier and transfer tests."""
    rng = random.Random(seed)
    issues = []
    for i in range(n_issues):
        comments = []
        n_comments = rng.randint(3, 8)
        solution_at = rng.randrange(n_comments)
        for j in range(n_comments):
            if j == solution_at:
                text = rng.choice(_SOLUTION_PHRASES) + " " + rng.choice(_SOLUTION_PHRASES)
                label = True
            else:
                text = rng.choice(_NOISE_PHRASES) + " " + rng.choice(_NOISE_PHRASES)
                label = False
            comments.append(Comment(
                id=f"c{j}", author=f"user{rng.randint(0, 5)}", timestamp=100 + j,
                text=text, is_solution=label))
        issues.append(IssueReport(
            id=f"issue-{i:03d}", app_id="synth", title=f"problem {i}",
            body="something broke", reporter="user0", comments=comments))
    return issues

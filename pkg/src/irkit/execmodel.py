"""App execution model: directed multigraph of screens and interactions.

Built from pre-recorded trace files (JSON Lines), never from live
instrumentation. Duplicate observations of the same event collapse into a
single interaction; interaction ids are assigned in first-observation
order so models are reproducible from identical traces.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .corpus import Screen
from .errors import (
    NoLaunchError,
    UnknownComponentError,
    UnknownScreenError,
    UnreachableError,
)


class Action(str, Enum):
    CLICK = "CLICK"
    LONG_CLICK = "LONG_CLICK"
    TYPE = "TYPE"
    SWIPE = "SWIPE"
    SCROLL = "SCROLL"
    BACK = "BACK"
    LAUNCH = "LAUNCH"


@dataclass(frozen=True)
class Interaction:
    id: str
    action: Action
    source_screen: str
    target_component: str | None
    dest_screen: str
    input_value: str | None = None


@dataclass
class ExecutionModel:
    screens: set[str]
    interactions: list[Interaction]
    launch_screen: str
    adjacency: dict[str, list[Interaction]] = field(default_factory=dict)
    _by_id: dict[str, Interaction] = field(default_factory=dict)

    def __post_init__(self):
        if not self.adjacency:
            adj: dict[str, list[Interaction]] = {s: [] for s in self.screens}
            for inter in self.interactions:
                adj[inter.source_screen].append(inter)
            for edges in adj.values():
                edges.sort(key=lambda i: i.id)
            self.adjacency = adj
        if not self._by_id:
            self._by_id = {i.id: i for i in self.interactions}

    def interaction_by_id(self, interaction_id: str) -> Interaction | None:
        return self._by_id.get(interaction_id)


def build_model(trace_records: Iterable[dict], screens: Mapping[str, Screen]) -> ExecutionModel:
    """Reconstruct the execution model from observed trace events.

    Dedup key is the full (action, source, component, dest, input) tuple;
    launch screen is the destination of the first LAUNCH record. LAUNCH and
    BACK interactions carry no target component; a LAUNCH interaction is
    stored as a self-loop on its destination screen.
    """
    launch_screen: str | None = None
    seen: dict[tuple, str] = {}
    interactions: list[Interaction] = []

    for record in trace_records:
        action = Action(record["action"])
        dest = record["dest"]
        if dest not in screens:
            raise UnknownScreenError(f"trace references unknown screen {dest!r}")
        if action is Action.LAUNCH:
            source = record.get("source", dest)
            component = None
            if launch_screen is None:
                launch_screen = dest
        else:
            source = record["source"]
            component = record.get("component") or None
        if source not in screens:
            raise UnknownScreenError(f"trace references unknown screen {source!r}")
        if component is not None and screens[source].component_by_id(component) is None:
            raise UnknownComponentError(
                f"trace references unknown component {component!r} on screen {source!r}")
        input_value = record.get("input") if action is Action.TYPE else None
        key = (action, source, component, dest, input_value)
        if key in seen:
            continue
        interaction_id = f"i{len(interactions):04d}"
        seen[key] = interaction_id
        interactions.append(Interaction(
            id=interaction_id,
            action=action,
            source_screen=source,
            target_component=component,
            dest_screen=dest,
            input_value=input_value,
        ))

    if launch_screen is None:
        raise NoLaunchError("trace contains no LAUNCH record")
    return ExecutionModel(
        screens=set(screens),
        interactions=interactions,
        launch_screen=launch_screen,
    )


def outgoing(model: ExecutionModel, screen_id: str) -> list[Interaction]:
    """Interactions leaving ``screen_id``, ordered by interaction id."""
    if screen_id not in model.screens:
        raise UnknownScreenError(f"screen {screen_id!r} not in model")
    return list(model.adjacency.get(screen_id, []))


def shortest_interaction_path(model: ExecutionModel, from_screen: str, to_screen: str) -> list[Interaction]:
    """Minimum-length interaction sequence between two screens (BFS).

    Among equal-length paths the id-lexicographically smallest interaction
    sequence wins; empty iff from == to.
    """
    if from_screen not in model.screens:
        raise UnknownScreenError(f"screen {from_screen!r} not in model")
    if to_screen not in model.screens:
        raise UnknownScreenError(f"screen {to_screen!r} not in model")
    if from_screen == to_screen:
        return []

    # reverse BFS from the target gives distance-to-target per screen
    reverse: dict[str, list[str]] = {s: [] for s in model.screens}
    for inter in model.interactions:
        reverse[inter.dest_screen].append(inter.source_screen)
    dist: dict[str, int] = {to_screen: 0}
    queue = deque([to_screen])
    while queue:
        node = queue.popleft()
        for prev in reverse[node]:
            if prev not in dist:
                dist[prev] = dist[node] + 1
                queue.append(prev)
    if from_screen not in dist:
        raise UnreachableError(f"no path from {from_screen!r} to {to_screen!r}")

    # greedy walk: smallest interaction id that stays on a shortest path
    path: list[Interaction] = []
    current = from_screen
    while current != to_screen:
        step = None
        for inter in model.adjacency[current]:  # already id-sorted
            if dist.get(inter.dest_screen) == dist[current] - 1:
                step = inter
                break
        assert step is not None
        path.append(step)
        current = step.dest_screen
    return path

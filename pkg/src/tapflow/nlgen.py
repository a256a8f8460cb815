"""Rule-based draft instructions for generated workflows.

Each function carries a catalog phrase; a draft instruction fuses the trigger
phrase with the action phrases in depth-first order, joined by connectives:
"then" for sequence continuations (and always for the very first action),
"and separately" between parallel-split siblings, and "and finally" before
the last phrase once a workflow has three or more actions.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import Catalog, MacroFunction
from .engine import Node, Wast
from .errors import MissingPhraseError, TapflowError

TEMPLATE_VERSION = "v1"


@dataclass(frozen=True)
class Connectives:
    first: str = "then"
    parallel: str = "and separately"
    final: str = "and finally"


@dataclass(frozen=True)
class TemplateSet:
    trigger_frame: str = "{phrase}"
    action_frame: str = "{phrase}"
    connectives: Connectives = field(default_factory=Connectives)
    sentence_frame: str = "If {trigger}, {actions}."

    def __post_init__(self):
        for frame, slot in (
            (self.trigger_frame, "{phrase}"),
            (self.action_frame, "{phrase}"),
        ):
            if frame.count(slot) != 1:
                raise TapflowError(f"frame {frame!r} must contain {slot} exactly once")
        for slot in ("{trigger}", "{actions}"):
            if self.sentence_frame.count(slot) != 1:
                raise TapflowError(f"sentence frame must contain {slot} exactly once")


DEFAULT_TEMPLATES = TemplateSet()

_CONNECTIVE_SYNONYMS = {
    "first": ["then", "next", "after that"],
    "parallel": ["and separately", "and at the same time", "and in parallel"],
    "final": ["and finally", "and lastly"],
}


def load_templates(path: str | Path) -> TemplateSet:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    conn = data.get("connectives", {})
    return TemplateSet(
        trigger_frame=data.get("trigger_frame", DEFAULT_TEMPLATES.trigger_frame),
        action_frame=data.get("action_frame", DEFAULT_TEMPLATES.action_frame),
        connectives=Connectives(
            first=conn.get("first", "then"),
            parallel=conn.get("parallel", "and separately"),
            final=conn.get("final", "and finally"),
        ),
        sentence_frame=data.get("sentence_frame", DEFAULT_TEMPLATES.sentence_frame),
    )


def tap_phrase(f: MacroFunction, role: str = "action",
               templates: TemplateSet = DEFAULT_TEMPLATES) -> str:
    """The catalog phrase for a function, wrapped in its role frame."""
    if not f.phrase:
        raise MissingPhraseError(f"function {f.qualified} has no phrase")
    frame = templates.trigger_frame if role == "trigger" else templates.action_frame
    return frame.format(phrase=f.phrase)


def _phrase(catalog: Catalog, node: Node, role: str, templates: TemplateSet) -> str:
    m = node.macro
    if m is None or not catalog.has_function(m.qualified):
        raise MissingPhraseError(f"unknown function {m.qualified if m else '?'}")
    return tap_phrase(catalog.function(m.qualified), role, templates)


def action_units(w: Wast, catalog: Catalog,
                 templates: TemplateSet = DEFAULT_TEMPLATES) -> list[tuple[str, str]]:
    """(connective key, phrase) per action, depth-first, with overrides applied.

    Keys are "first", "parallel", or "final". A split's children default to
    "parallel"; the very first action of the workflow is always "first"; the
    last action becomes "final" once there are at least three actions.
    """
    units: list[tuple[str, str]] = []

    def walk(pattern: Node):
        for call in pattern.action_calls:
            key = "parallel" if pattern.ctor == "Parallel_Split" else "first"
            units.append((key, _phrase(catalog, call, "action", templates)))
            if call.next_pattern is not None:
                walk(call.next_pattern)

    walk(w.pattern)
    if units:
        units[0] = ("first", units[0][1])
    if len(units) >= 3:
        units[-1] = ("final", units[-1][1])
    return units


def fuse_descriptions(
    w: Wast,
    catalog: Catalog,
    templates: TemplateSet = DEFAULT_TEMPLATES,
    augment: bool = False,
    rng: random.Random | None = None,
) -> str:
    """Deterministic draft instruction for a workflow.

    With ``augment=True`` (an anti-memorization knob, off by default) the
    connectives are swapped for seeded synonyms and all-leaf split siblings
    may be reordered.
    """
    trigger_call = w.pattern.trigger_call
    if trigger_call is None:
        raise MissingPhraseError("workflow has no trigger to describe")
    trigger_text = _phrase(catalog, trigger_call, "trigger", templates)
    units = action_units(w, catalog, templates)

    conn_text = {
        "first": templates.connectives.first,
        "parallel": templates.connectives.parallel,
        "final": templates.connectives.final,
    }
    if augment:
        if rng is None:
            raise TapflowError("augment=True requires an rng")
        conn_text = {k: rng.choice(v) for k, v in _CONNECTIVE_SYNONYMS.items()}
        units = _reorder_leaf_siblings(w, catalog, templates, rng)

    actions_text = ", ".join(f"{conn_text[key]} {phrase}" for key, phrase in units)
    return templates.sentence_frame.format(trigger=trigger_text, actions=actions_text)


def _reorder_leaf_siblings(
    w: Wast, catalog: Catalog, templates: TemplateSet, rng: random.Random
) -> list[tuple[str, str]]:
    """Like action_units, but shuffles split siblings when all are leaf calls."""
    units: list[tuple[str, str]] = []

    def walk(pattern: Node):
        calls = pattern.action_calls
        if pattern.ctor == "Parallel_Split" and all(c.next_pattern is None for c in calls):
            calls = list(calls)
            rng.shuffle(calls)
        for call in calls:
            key = "parallel" if pattern.ctor == "Parallel_Split" else "first"
            units.append((key, _phrase(catalog, call, "action", templates)))
            if call.next_pattern is not None:
                walk(call.next_pattern)

    walk(w.pattern)
    if units:
        units[0] = ("first", units[0][1])
    if len(units) >= 3:
        units[-1] = ("final", units[-1][1])
    return units

"""Transition system that incrementally builds workflow ASTs.

A partial tree grows by three moves applied at the first frontier slot:
apply a constructor, select a terminal macro (channel first, then function),
or close an optional/sequential slot. The frontier is maintained in pre-order
depth-first order over field declaration order, so a subtree is fully
expanded before the slot that follows it.
"""

from __future__ import annotations

import copy
import enum
import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

from .catalog import Catalog, DataKind, MacroFunction
from .errors import (
    ActionTextError,
    CompleteStateError,
    IllegalActionError,
    InvalidWastError,
)
from .grammar import (
    Cardinality,
    ConstructorDef,
    FieldDef,
    GrammarSpec,
    ROOT_TYPE,
    TERMINAL_TYPE,
    builtin_wpg,
)

PATTERN_CTORS = ("Sequence", "Parallel_Split")


class MacroRef(NamedTuple):
    channel: str
    function: str

    @property
    def qualified(self) -> str:
        return f"{self.channel}.{self.function}"


class ActionKind(enum.Enum):
    APPLY = "ApplyConstr"
    SELECT = "SelectMacr"
    STOP = "StopExpnsn"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    token: str | None = None

    @staticmethod
    def apply(constructor: str) -> "Action":
        return Action(ActionKind.APPLY, constructor)

    @staticmethod
    def select(token: str) -> "Action":
        return Action(ActionKind.SELECT, token)

    @staticmethod
    def stop() -> "Action":
        return Action(ActionKind.STOP)

    @property
    def text(self) -> str:
        """Canonical textual form, e.g. ``ApplyConstr[Sequence]``."""
        if self.kind is ActionKind.STOP:
            return "StopExpnsn"
        return f"{self.kind.value}[{self.token}]"

    def __str__(self) -> str:
        return self.text


_ACTION_RE = re.compile(r"^(ApplyConstr|SelectMacr)\[([A-Za-z][A-Za-z0-9_]*)\]$")


def parse_action(text: str) -> Action:
    text = text.strip()
    if text == "StopExpnsn":
        return Action.stop()
    m = _ACTION_RE.match(text)
    if not m:
        raise ActionTextError(f"malformed action token: {text!r}")
    kind, token = m.groups()
    if kind == "ApplyConstr":
        return Action.apply(token)
    return Action.select(token)


# -- tree ------------------------------------------------------------------


@dataclass(eq=False)
class FieldSlot:
    owner: "Node | None"
    fdef: FieldDef
    values: list = field(default_factory=list)
    closed: bool = False
    chosen_channel: str | None = None

    @property
    def label(self) -> str:
        """Display label in the expansion-table style, e.g. ``func? trigger``."""
        if self.owner is None:
            return f"{ROOT_TYPE} root"
        if self.fdef.type_name == TERMINAL_TYPE and self.chosen_channel is not None:
            return self.chosen_channel
        return self.fdef.signature


@dataclass(eq=False)
class Node:
    ctor: str
    slots: dict[str, FieldSlot]
    parent: "Node | None" = None
    parent_field: str | None = None

    # -- structural accessors (valid once the relevant slots are filled) --

    @property
    def macro(self) -> MacroRef | None:
        slot = self.slots.get("channel")
        return slot.values[0] if slot and slot.values else None

    @property
    def next_pattern(self) -> "Node | None":
        slot = self.slots.get("next")
        return slot.values[0] if slot and slot.values else None

    @property
    def trigger_call(self) -> "Node | None":
        slot = self.slots.get("trigger")
        return slot.values[0] if slot and slot.values else None

    @property
    def action_calls(self) -> list["Node"]:
        slot = self.slots.get("action")
        return list(slot.values) if slot else []

    @property
    def is_pattern(self) -> bool:
        return self.ctor in PATTERN_CTORS

    @property
    def is_chained(self) -> bool:
        """True when this pattern hangs off a Call's next field."""
        return self.parent is not None and self.parent.ctor == "Call"


def _new_node(ctor: ConstructorDef, parent: Node | None, parent_field: str | None) -> Node:
    node = Node(ctor.name, {}, parent, parent_field)
    node.slots = {f.name: FieldSlot(node, f) for f in ctor.fields}
    return node


@dataclass(eq=False)
class TransitionState:
    grammar: GrammarSpec
    root: Node | None
    frontier: list[FieldSlot]
    step: int = 0
    actions: list[Action] = field(default_factory=list)

    def clone(self) -> "TransitionState":
        memo = {id(self.grammar): self.grammar}
        return copy.deepcopy(self, memo)

    @property
    def frontier_labels(self) -> list[str]:
        return [s.label for s in self.frontier]


def init_state(grammar: GrammarSpec | None = None) -> TransitionState:
    grammar = grammar or builtin_wpg()
    root_slot = FieldSlot(None, FieldDef("root", grammar.root_type))
    return TransitionState(grammar, None, [root_slot])


def is_complete(state: TransitionState) -> bool:
    return not state.frontier


# -- legality --------------------------------------------------------------


def _pattern_of_call(call: Node) -> Node:
    assert call.parent is not None
    return call.parent


def _pattern_source(pattern: Node) -> MacroRef | None:
    """The function feeding this pattern's actions: chain function or own trigger."""
    if pattern.is_chained:
        return pattern.parent.macro
    tc = pattern.trigger_call
    return tc.macro if tc is not None else None


def _viable_trigger(catalog: Catalog, f: MacroFunction, pattern_ctor: str) -> bool:
    need = 2 if pattern_ctor == "Parallel_Split" else 1
    return f.trigger_capable and len(catalog.trigger_targets(f)) >= need


def _candidate_macros(catalog: Catalog, call: Node) -> list[MacroFunction]:
    """Functions that may legally fill a Call, honoring role and data-flow."""
    role = call.parent_field
    pattern = _pattern_of_call(call)
    if role == "trigger":
        return [
            f for f in catalog.trigger_functions() if _viable_trigger(catalog, f, pattern.ctor)
        ]
    # action role: fed by the pattern's source, distinct from filled siblings
    source_ref = _pattern_source(pattern)
    assert source_ref is not None, "action slot reached before source selected"
    source = catalog.function(source_ref.qualified)
    used = {
        sib.macro for sib in pattern.action_calls if sib is not call and sib.macro is not None
    }
    if pattern.is_chained:
        options = catalog.successors(source)
    else:
        options = catalog.trigger_targets(source)
    return [g for g in options if MacroRef(g.channel, g.name) not in used]


def _pattern_kind_options(catalog: Catalog, slot: FieldSlot) -> list[str]:
    """Which pattern constructors may fill a wpg-typed slot."""
    out = []
    if slot.owner is not None and slot.owner.ctor == "Call":
        f = catalog.function(slot.owner.macro.qualified)
        n = len(catalog.successors(f))
        if n >= 1:
            out.append("Sequence")
        if n >= 2:
            out.append("Parallel_Split")
    else:  # Workflow's pattern field: source picked later, check any viable trigger
        for ctor in PATTERN_CTORS:
            if any(_viable_trigger(catalog, f, ctor) for f in catalog.trigger_functions()):
                out.append(ctor)
    return out


def legal_actions(state: TransitionState, catalog: Catalog) -> list[Action]:
    """All actions whose application keeps the state grammar- and flow-legal.

    Returned in a deterministic order (set semantics). The legal set does
    enough lookahead that no reachable state is ever stuck: a slot always
    admits at least one action.
    """
    if not state.frontier:
        raise CompleteStateError("state is complete; no frontier slot to expand")
    slot = state.frontier[0]
    tname = slot.fdef.type_name
    out: list[Action] = []

    if tname == TERMINAL_TYPE:
        candidates = _candidate_macros(catalog, slot.owner)
        if slot.chosen_channel is None:
            seen = []
            for f in candidates:
                if f.channel not in seen:
                    seen.append(f.channel)
            out = [Action.select(ch) for ch in seen]
        else:
            out = [
                Action.select(f.name) for f in candidates if f.channel == slot.chosen_channel
            ]
    elif tname == "wpg":
        out = [Action.apply(c) for c in _pattern_kind_options(catalog, slot)]
        if slot.fdef.cardinality is Cardinality.OPTIONAL:
            out.append(Action.stop())
    elif tname == "func":
        if slot.fdef.name == "trigger":
            # Deduplication rule: a chained-into pattern keeps a null trigger.
            # An unchained (root) pattern must have one, so closure is illegal.
            if slot.owner.is_chained:
                out = [Action.stop()]
            else:
                out = [Action.apply("Call")]
        elif slot.fdef.cardinality is Cardinality.SEQUENTIAL:
            call_probe = _new_node(state.grammar.constructor("Call"), slot.owner, slot.fdef.name)
            slot.values.append(call_probe)
            try:
                has_candidate = bool(_candidate_macros(catalog, call_probe))
            finally:
                slot.values.pop()
            if has_candidate:
                out.append(Action.apply("Call"))
            if len(slot.values) >= 2:
                out.append(Action.stop())
        else:
            out = [Action.apply("Call")]
    else:  # root stmt slot
        out = [Action.apply(c.name) for c in state.grammar.constructors_of(tname)]
    return out


def apply_action(
    state: TransitionState, action: Action, catalog: Catalog, *, inplace: bool = False
) -> TransitionState:
    """Apply one transition, returning the successor state.

    With ``inplace=False`` (the default) the input state is left untouched.
    """
    legal = legal_actions(state, catalog)
    if action not in legal:
        raise IllegalActionError(state.frontier[0].label, action.text)
    s = state if inplace else state.clone()
    slot = s.frontier[0]

    if action.kind is ActionKind.APPLY:
        ctor = s.grammar.constructor(action.token)
        child = _new_node(ctor, slot.owner, slot.fdef.name)
        slot.values.append(child)
        if slot.owner is None:
            s.root = child
        child_slots = [child.slots[f.name] for f in ctor.fields]
        if slot.fdef.cardinality is Cardinality.SEQUENTIAL:
            s.frontier[0:0] = child_slots  # slot stays open for more values
        else:
            slot.closed = True
            s.frontier[0:1] = child_slots
    elif action.kind is ActionKind.SELECT:
        if slot.chosen_channel is None:
            slot.chosen_channel = action.token
        else:
            slot.values.append(MacroRef(slot.chosen_channel, action.token))
            slot.closed = True
            s.frontier.pop(0)
    else:  # STOP
        slot.closed = True
        s.frontier.pop(0)

    s.step += 1
    s.actions.append(action)
    return s


def replay(
    actions: list[Action], grammar: GrammarSpec, catalog: Catalog
) -> TransitionState:
    state = init_state(grammar)
    for a in actions:
        state = apply_action(state, a, catalog, inplace=True)
    return state


# -- complete trees --------------------------------------------------------


class Wast:
    """A complete workflow AST (a finished transition state's tree)."""

    def __init__(self, root: Node):
        if root is None or root.ctor != "Workflow":
            raise InvalidWastError("root must be a Workflow node")
        self.root = root

    @classmethod
    def from_state(cls, state: TransitionState) -> "Wast":
        if not is_complete(state):
            raise InvalidWastError("state has open frontier slots")
        return cls(state.root)

    @property
    def pattern(self) -> Node:
        slot = self.root.slots["pattern"]
        if not slot.values:
            raise InvalidWastError("Workflow has no pattern child")
        return slot.values[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Wast):
            return NotImplemented
        return structurally_equal(self.root, other.root)

    __hash__ = None  # structural equality; not hashable

    def __repr__(self) -> str:
        try:
            return f"Wast({' '.join(a.text for a in oracle_actions(self))})"
        except InvalidWastError as exc:
            return f"Wast(<invalid: {exc}>)"


def structurally_equal(a: Node, b: Node) -> bool:
    """Compare constructor names, field order, and selected macro tokens."""
    if a.ctor != b.ctor or list(a.slots) != list(b.slots):
        return False
    for name in a.slots:
        va, vb = a.slots[name].values, b.slots[name].values
        if len(va) != len(vb):
            return False
        for x, y in zip(va, vb):
            if isinstance(x, MacroRef) != isinstance(y, MacroRef):
                return False
            if isinstance(x, MacroRef):
                if x != y:
                    return False
            elif not structurally_equal(x, y):
                return False
    return True


def iter_patterns(w: Wast) -> Iterator[Node]:
    def walk(p: Node) -> Iterator[Node]:
        yield p
        for call in ([p.trigger_call] if p.trigger_call else []) + p.action_calls:
            if call.next_pattern is not None:
                yield from walk(call.next_pattern)

    yield from walk(w.pattern)


def iter_calls(w: Wast) -> Iterator[Node]:
    for p in iter_patterns(w):
        if p.trigger_call is not None:
            yield p.trigger_call
        yield from p.action_calls


def node_count(w: Wast) -> int:
    return 1 + sum(1 for _ in iter_patterns(w)) + sum(1 for _ in iter_calls(w))


def pattern_depth(w: Wast) -> int:
    """Maximum number of pattern nodes on any root-to-leaf path."""

    def depth(p: Node) -> int:
        nested = [
            depth(c.next_pattern) for c in p.action_calls if c.next_pattern is not None
        ]
        return 1 + max(nested, default=0)

    return depth(w.pattern)


def selected_macros(tree: Node | None) -> list[MacroRef]:
    """Macro tokens selected anywhere in a (possibly partial) tree, pre-order."""
    out: list[MacroRef] = []

    def walk(n: Node | None):
        if n is None:
            return
        for slot in n.slots.values():
            for v in slot.values:
                if isinstance(v, MacroRef):
                    out.append(v)
                else:
                    walk(v)

    walk(tree)
    return out


# -- builders (direct tree construction) -----------------------------------


def build_call(
    grammar: GrammarSpec, macro: MacroRef, next_pattern: Node | None = None
) -> Node:
    call = _new_node(grammar.constructor("Call"), None, None)
    ch = call.slots["channel"]
    ch.chosen_channel = macro.channel
    ch.values.append(macro)
    ch.closed = True
    nxt = call.slots["next"]
    if next_pattern is not None:
        next_pattern.parent = call
        next_pattern.parent_field = "next"
        nxt.values.append(next_pattern)
    nxt.closed = True
    return call


def build_pattern(
    grammar: GrammarSpec, ctor: str, trigger: Node | None, actions: list[Node]
) -> Node:
    if ctor not in PATTERN_CTORS:
        raise InvalidWastError(f"{ctor} is not a pattern constructor")
    p = _new_node(grammar.constructor(ctor), None, None)
    ts = p.slots["trigger"]
    if trigger is not None:
        trigger.parent = p
        trigger.parent_field = "trigger"
        ts.values.append(trigger)
    ts.closed = True
    aslot = p.slots["action"]
    for call in actions:
        call.parent = p
        call.parent_field = "action"
        aslot.values.append(call)
    aslot.closed = True
    return p


def build_workflow(grammar: GrammarSpec, pattern: Node) -> Wast:
    wf = _new_node(grammar.constructor("Workflow"), None, None)
    pattern.parent = wf
    pattern.parent_field = "pattern"
    ps = wf.slots["pattern"]
    ps.values.append(pattern)
    ps.closed = True
    return Wast(wf)


# -- oracle ----------------------------------------------------------------


def oracle_actions(w: Wast) -> list[Action]:
    """The unique action sequence that rebuilds ``w`` from the initial state."""
    acts: list[Action] = []

    def emit_call(call: Node):
        acts.append(Action.apply("Call"))
        m = call.macro
        if m is None:
            raise InvalidWastError("Call without a selected channel.function")
        acts.append(Action.select(m.channel))
        acts.append(Action.select(m.function))
        nxt = call.next_pattern
        if nxt is not None:
            emit_pattern(nxt)
        else:
            acts.append(Action.stop())

    def emit_pattern(p: Node):
        if not p.is_pattern:
            raise InvalidWastError(f"expected a pattern node, got {p.ctor}")
        acts.append(Action.apply(p.ctor))
        tc = p.trigger_call
        if p.is_chained and tc is not None:
            raise InvalidWastError("chained pattern must have a null trigger")
        if tc is not None:
            emit_call(tc)
        else:
            acts.append(Action.stop())
        calls = p.action_calls
        if p.ctor == "Sequence" and len(calls) != 1:
            raise InvalidWastError("Sequence must have exactly one action")
        if p.ctor == "Parallel_Split" and len(calls) < 2:
            raise InvalidWastError("Parallel_Split needs at least two actions")
        for call in calls:
            emit_call(call)
        if p.ctor == "Parallel_Split":
            acts.append(Action.stop())

    acts.append(Action.apply("Workflow"))
    emit_pattern(w.pattern)
    return acts


# -- validation --------------------------------------------------------------


def validate_wast(w: Wast, catalog: Catalog) -> list[str]:
    """All invariant and data-flow violations; an empty list means valid."""
    violations: list[str] = []

    def check_call(call: Node, role: str):
        m = call.macro
        if m is None:
            violations.append(f"{role} Call has no selected function")
            return None
        if not catalog.has_function(m.qualified):
            violations.append(f"unknown function {m.qualified}")
            return None
        f = catalog.function(m.qualified)
        if role == "trigger":
            if not f.trigger_capable:
                violations.append(f"{m.qualified} is not trigger-capable")
            if call.next_pattern is not None:
                violations.append(f"trigger Call {m.qualified} must not chain")
        else:
            if not f.action_capable:
                violations.append(f"{m.qualified} is not action-capable")
        return f

    def check_pattern(p: Node):
        if not p.is_pattern:
            violations.append(f"unexpected node {p.ctor} in pattern position")
            return
        tc = p.trigger_call
        if p.is_chained and tc is not None:
            violations.append("chained pattern has a duplicated trigger")
        if not p.is_chained and tc is None:
            violations.append("pattern has neither a trigger nor a chaining Call")

        source = None
        if p.is_chained:
            m = p.parent.macro
            source = catalog.function(m.qualified) if m and catalog.has_function(m.qualified) else None
        elif tc is not None:
            source = check_call(tc, "trigger")

        calls = p.action_calls
        if p.ctor == "Sequence" and len(calls) != 1:
            violations.append(f"Sequence has {len(calls)} actions, expected 1")
        if p.ctor == "Parallel_Split" and len(calls) < 2:
            violations.append("sequential arity < 2 on Parallel_Split actions")
        seen: set[MacroRef] = set()
        for call in calls:
            g = check_call(call, "action")
            if call.macro is not None:
                if call.macro in seen:
                    violations.append(f"duplicate sibling action {call.macro.qualified}")
                seen.add(call.macro)
            if source is not None and g is not None:
                if p.is_chained:
                    if source.output_kind is DataKind.NONE:
                        violations.append(
                            f"{source.qualified} has no return value and cannot chain"
                        )
                    elif not catalog.chainable(source, g):
                        violations.append(
                            f"chain {source.qualified} -> {g.qualified} not licensed"
                        )
                elif not catalog.feeds(source, g):
                    violations.append(
                        f"data flow {source.qualified} -> {g.qualified} incompatible"
                    )
            if call.next_pattern is not None:
                check_pattern(call.next_pattern)
        if tc is not None and tc.next_pattern is not None:
            check_pattern(tc.next_pattern)

    try:
        check_pattern(w.pattern)
    except InvalidWastError as exc:
        violations.append(str(exc))
    return violations


# -- pretty printing ---------------------------------------------------------


def pretty_action(action: Action, grammar: GrammarSpec) -> str:
    """Display string in the expansion-table style."""
    if action.kind is ActionKind.APPLY:
        return grammar.constructor(action.token).signature
    if action.kind is ActionKind.STOP:
        return "StopExpnsn(close the frontier field)"
    return action.text


def trace(
    actions: list[Action], grammar: GrammarSpec, catalog: Catalog
) -> list[tuple[str, str]]:
    """(frontier label, action display) rows for an action sequence."""
    rows = []
    state = init_state(grammar)
    for a in actions:
        rows.append((state.frontier[0].label, pretty_action(a, grammar)))
        state = apply_action(state, a, catalog, inplace=True)
    return rows


def outline(w: Wast) -> str:
    """Indented text rendering of the tree, one node per line."""
    lines: list[str] = ["Workflow"]

    def fmt_call(call: Node, indent: int, role: str):
        pad = "  " * indent
        m = call.macro
        lines.append(f"{pad}{role}: Call {m.qualified if m else '?'}")
        if call.next_pattern is not None:
            fmt_pattern(call.next_pattern, indent + 1, "next")

    def fmt_pattern(p: Node, indent: int, role: str):
        pad = "  " * indent
        lines.append(f"{pad}{role}: {p.ctor}")
        if p.trigger_call is not None:
            fmt_call(p.trigger_call, indent + 1, "trigger")
        for call in p.action_calls:
            fmt_call(call, indent + 1, "action")

    fmt_pattern(w.pattern, 1, "pattern")
    return "\n".join(lines)

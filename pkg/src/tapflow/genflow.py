"""Seeded random generation and exhaustive enumeration of workflows.

Generation chains TAPs vertically (an action's result evokes the next
pattern) and horizontally (one source fans out into several actions), with
all choices drawn from a private seeded stream so equal configs give equal
trees.
"""

from __future__ import annotations

import enum
import random
from dataclasses import asdict, dataclass
from typing import Iterator

from .catalog import Catalog, MacroFunction
from .engine import (
    Action,
    ActionKind,
    MacroRef,
    Node,
    TransitionState,
    Wast,
    apply_action,
    build_call,
    build_pattern,
    build_workflow,
    init_state,
    is_complete,
    legal_actions,
)
from .errors import ExhaustedSearchError, TapflowError
from .grammar import Cardinality, GrammarSpec, builtin_wpg


class UsefulnessLabel(enum.Enum):
    A = "A"
    B = "B"
    C = "C"
    UNLABELED = "Unlabeled"


@dataclass(frozen=True)
class GenConfig:
    seed: int
    max_depth: int = 3
    max_branch: int = 3
    p_extend: float = 0.5
    p_split: float = 0.5

    def __post_init__(self):
        if self.max_depth < 1:
            raise TapflowError("max_depth must be >= 1")
        if self.max_branch < 2:
            raise TapflowError("max_branch must be >= 2")
        for name in ("p_extend", "p_split"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise TapflowError(f"{name} must be in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GenConfig":
        return cls(
            seed=int(data["seed"]),
            max_depth=int(data.get("max_depth", 3)),
            max_branch=int(data.get("max_branch", 3)),
            p_extend=float(data.get("p_extend", 0.5)),
            p_split=float(data.get("p_split", 0.5)),
        )


DEFAULT_RETRY_BUDGET = 32


def generate_workflow(
    catalog: Catalog,
    config: GenConfig,
    grammar: GrammarSpec | None = None,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
) -> Wast:
    """One random valid workflow; identical (catalog, config) gives an
    identical tree."""
    grammar = grammar or builtin_wpg()
    rng = random.Random(config.seed)
    triggers = [
        f for f in catalog.trigger_functions() if catalog.trigger_targets(f)
    ]
    if not triggers:
        raise ExhaustedSearchError("no trigger has any kind-compatible action")

    last_error: Exception | None = None
    for _ in range(max(1, retry_budget)):
        try:
            return _sample(catalog, config, grammar, rng, triggers)
        except _DeadEnd as exc:  # pragma: no cover - filtered sampling rarely dead-ends
            last_error = exc
    raise ExhaustedSearchError(f"generation dead-ended repeatedly: {last_error}")


class _DeadEnd(TapflowError):
    pass


def _sample(
    catalog: Catalog,
    config: GenConfig,
    grammar: GrammarSpec,
    rng: random.Random,
    triggers: list[MacroFunction],
) -> Wast:
    def make_action_call(g: MacroFunction, depth: int) -> Node:
        nxt = None
        successors = catalog.successors(g)
        if depth < config.max_depth and successors and rng.random() < config.p_extend:
            nxt = make_pattern(successors, depth + 1)
        return build_call(grammar, MacroRef(g.channel, g.name), nxt)

    def make_pattern(options: list[MacroFunction], depth: int,
                     trigger: MacroFunction | None = None) -> Node:
        if not options:
            raise _DeadEnd("no compatible action available")
        split = len(options) >= 2 and rng.random() < config.p_split
        if split:
            arity = rng.randint(2, min(config.max_branch, len(options)))
            picks = rng.sample(options, arity)
            kind = "Parallel_Split"
        else:
            picks = [rng.choice(options)]
            kind = "Sequence"
        trigger_call = (
            build_call(grammar, MacroRef(trigger.channel, trigger.name))
            if trigger is not None
            else None
        )
        actions = [make_action_call(g, depth) for g in picks]
        return build_pattern(grammar, kind, trigger_call, actions)

    t = rng.choice(triggers)
    root = make_pattern(catalog.trigger_targets(t), 1, trigger=t)
    return build_workflow(grammar, root)


# -- exhaustive enumeration ----------------------------------------------------


def _slot_pattern_depth(state: TransitionState) -> int:
    """Pattern depth a constructor applied at the current slot would have."""
    slot = state.frontier[0]
    depth = 1
    node = slot.owner
    while node is not None:
        if node.is_pattern:
            depth += 1
        node = node.parent
    return depth


def _capped_actions(
    state: TransitionState,
    catalog: Catalog,
    max_depth: int,
    max_branch: int | None,
) -> list[Action]:
    slot = state.frontier[0]
    out = []
    for a in legal_actions(state, catalog):
        if a.kind is ActionKind.APPLY and a.token in ("Sequence", "Parallel_Split"):
            if _slot_pattern_depth(state) > max_depth:
                continue
        if (
            max_branch is not None
            and a.kind is ActionKind.APPLY
            and a.token == "Call"
            and slot.fdef.cardinality is Cardinality.SEQUENTIAL
            and len(slot.values) >= max_branch
        ):
            continue
        out.append(a)
    return out


def enumerate_workflows(
    catalog: Catalog,
    max_depth: int,
    max_branch: int | None = None,
    grammar: GrammarSpec | None = None,
) -> Iterator[Wast]:
    """Every valid workflow within the depth/branch bounds, each exactly once.

    Drives the transition system exhaustively, so the stream is exactly the
    set of reachable complete states; intended as a brute-force oracle for
    small catalogs.
    """
    grammar = grammar or builtin_wpg()

    def expand(state: TransitionState) -> Iterator[Wast]:
        if is_complete(state):
            yield Wast.from_state(state)
            return
        for a in _capped_actions(state, catalog, max_depth, max_branch):
            yield from expand(apply_action(state, a, catalog))

    yield from expand(init_state(grammar))


def random_walk(
    catalog: Catalog,
    rng: random.Random,
    grammar: GrammarSpec | None = None,
    max_depth: int = 6,
    max_branch: int | None = 4,
) -> TransitionState:
    """Apply uniformly random legal actions (depth/branch capped) to completion."""
    grammar = grammar or builtin_wpg()
    state = init_state(grammar)
    while not is_complete(state):
        choices = _capped_actions(state, catalog, max_depth, max_branch)
        if not choices:  # pragma: no cover - legality lookahead prevents this
            raise ExhaustedSearchError("random walk reached a stuck state")
        state = apply_action(state, rng.choice(choices), catalog, inplace=True)
    return state

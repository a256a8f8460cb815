"""Workflow pattern grammar: type and constructor definitions.

The grammar is ASDL-flavoured: each type owns constructors, each constructor
an ordered field list. Fields carry a cardinality marker (``?`` optional,
``*`` sequential). The ``type`` pseudo-type is terminal: its values come from
a catalog of channels and macro functions rather than from constructors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import GrammarError

TERMINAL_TYPE = "type"
ROOT_TYPE = "stmt"


class Cardinality(enum.Enum):
    SINGLE = "single"
    OPTIONAL = "optional"
    SEQUENTIAL = "sequential"

    @property
    def marker(self) -> str:
        return {"single": "", "optional": "?", "sequential": "*"}[self.value]


@dataclass(frozen=True)
class FieldDef:
    name: str
    type_name: str
    cardinality: Cardinality = Cardinality.SINGLE

    @property
    def signature(self) -> str:
        return f"{self.type_name}{self.cardinality.marker} {self.name}"


@dataclass(frozen=True)
class ConstructorDef:
    name: str
    fields: tuple[FieldDef, ...]

    def __post_init__(self):
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise GrammarError(f"duplicate field names in constructor {self.name}")

    @property
    def signature(self) -> str:
        return f"{self.name}({', '.join(f.signature for f in self.fields)})"


@dataclass(frozen=True)
class TypeDef:
    name: str
    constructors: tuple[ConstructorDef, ...]


@dataclass(frozen=True)
class GrammarSpec:
    types: tuple[TypeDef, ...]
    root_type: str = ROOT_TYPE
    _by_type: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _by_ctor: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        for t in self.types:
            if t.name in self._by_type:
                raise GrammarError(f"duplicate type {t.name}")
            self._by_type[t.name] = t
            if t.name != TERMINAL_TYPE and not t.constructors:
                raise GrammarError(f"type {t.name} has no constructors")
            for c in t.constructors:
                if c.name in self._by_ctor:
                    raise GrammarError(f"duplicate constructor {c.name}")
                self._by_ctor[c.name] = (t, c)
        if self.root_type not in self._by_type:
            raise GrammarError(f"root type {self.root_type} undefined")
        for t in self.types:
            for c in t.constructors:
                for f in c.fields:
                    if f.type_name not in self._by_type and f.type_name != TERMINAL_TYPE:
                        raise GrammarError(
                            f"field {c.name}.{f.name} names unknown type {f.type_name}"
                        )

    def type_named(self, name: str) -> TypeDef:
        try:
            return self._by_type[name]
        except KeyError:
            raise GrammarError(f"unknown type {name}") from None

    def constructor(self, name: str) -> ConstructorDef:
        try:
            return self._by_ctor[name][1]
        except KeyError:
            raise GrammarError(f"unknown constructor {name}") from None

    def constructors_of(self, type_name: str) -> tuple[ConstructorDef, ...]:
        return self.type_named(type_name).constructors

    def type_of_constructor(self, name: str) -> str:
        try:
            return self._by_ctor[name][0].name
        except KeyError:
            raise GrammarError(f"unknown constructor {name}") from None


def builtin_wpg() -> GrammarSpec:
    """The built-in four-type workflow grammar.

    stmt = Workflow(wpg pattern)
    wpg  = Sequence(func? trigger, func action)
         | Parallel_Split(func? trigger, func* action)
    func = Call(type channel, wpg? next)
    type = <terminal, expanded from a catalog>
    """
    S, O, Q = Cardinality.SINGLE, Cardinality.OPTIONAL, Cardinality.SEQUENTIAL
    return GrammarSpec(
        types=(
            TypeDef("stmt", (ConstructorDef("Workflow", (FieldDef("pattern", "wpg", S),)),)),
            TypeDef(
                "wpg",
                (
                    ConstructorDef(
                        "Sequence",
                        (FieldDef("trigger", "func", O), FieldDef("action", "func", S)),
                    ),
                    ConstructorDef(
                        "Parallel_Split",
                        (FieldDef("trigger", "func", O), FieldDef("action", "func", Q)),
                    ),
                ),
            ),
            TypeDef(
                "func",
                (
                    ConstructorDef(
                        "Call",
                        (FieldDef("channel", TERMINAL_TYPE, S), FieldDef("next", "wpg", O)),
                    ),
                ),
            ),
            TypeDef(TERMINAL_TYPE, ()),
        )
    )

"""Dataset records, splits, stats, and the annotation life cycle.

Records are line-delimited JSON with exactly the fields
{id, nl, formal, actions, label, status, split, provenance}; the gold
supervision target is the action sequence, with the formal text kept for
human review and round-trip checks.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
import random

from .catalog import Catalog
from .engine import Wast, replay
from .errors import (
    ConsistencyError,
    DuplicateIdError,
    RecordFormatError,
    TapflowError,
)
from .genflow import UsefulnessLabel
from .grammar import GrammarSpec, builtin_wpg
from .surface import (
    actions_to_text,
    formal_function_refs,
    formal_pattern_depth,
    text_to_actions,
    to_formal_expression,
)

RECORD_FIELDS = ("id", "nl", "formal", "actions", "label", "status", "split", "provenance")


class Status(enum.Enum):
    GENERATED = "generated"
    LABELED = "labeled"
    DESCRIBED = "described"
    REVIEWED = "reviewed"

    @property
    def rank(self) -> int:
        return ("generated", "labeled", "described", "reviewed").index(self.value)


class Split(enum.Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"
    UNASSIGNED = "unassigned"


@dataclass(frozen=True)
class Example:
    id: str
    nl: str
    formal: str
    actions: tuple[str, ...]
    label: UsefulnessLabel = UsefulnessLabel.UNLABELED
    status: Status = Status.GENERATED
    split: Split = Split.UNASSIGNED
    provenance: dict = field(default_factory=dict, compare=False)

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "nl": self.nl,
                "formal": self.formal,
                "actions": list(self.actions),
                "label": self.label.value,
                "status": self.status.value,
                "split": self.split.value,
                "provenance": self.provenance,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_dict(cls, data: dict) -> "Example":
        return cls(
            id=str(data["id"]),
            nl=str(data["nl"]),
            formal=str(data["formal"]),
            actions=tuple(data["actions"]),
            label=UsefulnessLabel(data.get("label", "Unlabeled")),
            status=Status(data.get("status", "generated")),
            split=Split(data.get("split", "unassigned")),
            provenance=dict(data.get("provenance", {})),
        )

    def replay_wast(self, catalog: Catalog, grammar: GrammarSpec | None = None) -> Wast:
        state = replay(text_to_actions(list(self.actions)), grammar or builtin_wpg(), catalog)
        return Wast.from_state(state)

    def depth(self) -> int:
        return formal_pattern_depth(self.formal)


def verify_example(example: Example, catalog: Catalog,
                   grammar: GrammarSpec | None = None) -> None:
    """Raise ConsistencyError unless actions replay to the stored formal text."""
    try:
        w = example.replay_wast(catalog, grammar)
        rendered = to_formal_expression(w)
    except TapflowError as exc:
        raise ConsistencyError(f"record {example.id}: actions do not replay ({exc})") from exc
    if rendered != example.formal:
        raise ConsistencyError(
            f"record {example.id}: replay serializes to {rendered!r}, stored {example.formal!r}"
        )


def emit_records(examples: list[Example], path: str | Path, append: bool = False) -> None:
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8") as fh:
        for e in examples:
            fh.write(e.to_json() + "\n")


def load_records(
    path: str | Path,
    catalog: Catalog | None = None,
    grammar: GrammarSpec | None = None,
) -> list[Example]:
    """Load records in file order; with a catalog, enforce replay consistency."""
    out: list[Example] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                example = Example.from_dict(data)
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise RecordFormatError(line_no, str(exc)) from exc
            if example.id in seen:
                raise DuplicateIdError(f"line {line_no}: duplicate id {example.id}")
            seen.add(example.id)
            if catalog is not None:
                verify_example(example, catalog, grammar)
            out.append(example)
    return out


# -- splitting -----------------------------------------------------------------


def _apportion(n: int, ratios: tuple[float, float, float]) -> list[int]:
    """Largest-remainder apportionment; sizes within one of ratio * n."""
    raw = [r * n for r in ratios]
    counts = [int(x) for x in raw]
    remainder = n - sum(counts)
    order = sorted(range(len(ratios)), key=lambda i: (raw[i] - counts[i]), reverse=True)
    for i in range(remainder):
        counts[order[i % len(order)]] += 1
    return counts


def split_dataset(
    examples: list[Example],
    ratios: tuple[float, float, float],
    seed: int,
    stratify_by_depth: bool = False,
) -> list[Example]:
    """Assign train/dev/test splits deterministically; returns new records
    in the input order."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise TapflowError(f"split ratios must sum to 1, got {sum(ratios)}")
    rng = random.Random(seed)
    assignment: dict[int, Split] = {}

    def assign(indices: list[int]):
        indices = list(indices)
        rng.shuffle(indices)
        counts = _apportion(len(indices), ratios)
        splits = [Split.TRAIN] * counts[0] + [Split.DEV] * counts[1] + [Split.TEST] * counts[2]
        for idx, sp in zip(indices, splits):
            assignment[idx] = sp

    if stratify_by_depth:
        by_depth: dict[int, list[int]] = {}
        for i, e in enumerate(examples):
            by_depth.setdefault(e.depth(), []).append(i)
        for d in sorted(by_depth):
            assign(by_depth[d])
    else:
        assign(list(range(len(examples))))

    return [replace(e, split=assignment[i]) for i, e in enumerate(examples)]


# -- statistics ------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetStats:
    total: int
    by_label: dict[str, int]
    by_status: dict[str, int]
    by_split: dict[str, int]
    depth_histogram: dict[int, int]
    function_counts: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "by_label": self.by_label,
            "by_status": self.by_status,
            "by_split": self.by_split,
            "depth_histogram": {str(k): v for k, v in sorted(self.depth_histogram.items())},
            "function_counts": dict(sorted(self.function_counts.items())),
        }


def compute_stats(examples: list[Example]) -> DatasetStats:
    labels = Counter(e.label.value for e in examples)
    statuses = Counter(e.status.value for e in examples)
    splits = Counter(e.split.value for e in examples)
    depths = Counter(e.depth() for e in examples)
    functions: Counter = Counter()
    for e in examples:
        functions.update(formal_function_refs(e.formal))
    return DatasetStats(
        total=len(examples),
        by_label={lab.value: labels.get(lab.value, 0) for lab in UsefulnessLabel},
        by_status={st.value: statuses.get(st.value, 0) for st in Status},
        by_split={sp.value: splits.get(sp.value, 0) for sp in Split},
        depth_histogram=dict(depths),
        function_counts=dict(functions),
    )


def make_example(
    example_id: str,
    w: Wast,
    nl: str,
    actions: list,
    catalog: Catalog,
    provenance: dict | None = None,
) -> Example:
    return Example(
        id=example_id,
        nl=nl,
        formal=to_formal_expression(w),
        actions=tuple(actions_to_text(actions)),
        provenance=provenance or {},
    )

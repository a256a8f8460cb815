"""Textual surface forms: formal expressions and canonical action lines.

A workflow serializes to a nested pattern expression whose arguments are
``Channel.Function`` references or nested patterns. Chaining is inlined: a
Call with a next pattern renders as that pattern with the Call's function
inserted as the first argument (the pattern's own trigger slot being null by
the deduplication rule). Parsing un-inlines the first argument back into the
enclosing Call.
"""

from __future__ import annotations

import re
from pathlib import Path

from .catalog import Catalog
from .engine import (
    Action,
    MacroRef,
    Node,
    Wast,
    build_call,
    build_pattern,
    build_workflow,
    parse_action,
)
from .errors import (
    ArityError,
    DataFlowError,
    InvalidWastError,
    LexicalError,
    UnknownReferenceError,
)
from .grammar import GrammarSpec, builtin_wpg

PATTERN_KEYWORDS = ("Sequence", "Parallel_Split")


# -- serialization -----------------------------------------------------------


def to_formal_expression(w: Wast) -> str:
    """Render a valid workflow tree as canonical surface text."""

    def render_call(call: Node) -> str:
        m = call.macro
        if m is None:
            raise InvalidWastError("Call without a selected function")
        nxt = call.next_pattern
        if nxt is not None:
            return render_pattern(nxt, inlined=m.qualified)
        return m.qualified

    def render_pattern(p: Node, inlined: str | None = None) -> str:
        if inlined is not None:
            first = inlined
        else:
            tc = p.trigger_call
            if tc is None:
                raise InvalidWastError("pattern has neither trigger nor chaining Call")
            first = render_call(tc)
        calls = p.action_calls
        if p.ctor == "Sequence" and len(calls) != 1:
            raise InvalidWastError("Sequence must have exactly one action")
        if p.ctor == "Parallel_Split" and len(calls) < 2:
            raise InvalidWastError("Parallel_Split needs at least two actions")
        args = [first] + [render_call(c) for c in calls]
        return f"{p.ctor}({', '.join(args)})"

    return render_pattern(w.pattern)


# -- parsing -----------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*([A-Za-z][A-Za-z0-9_]*|[(),.])")


def _tokenize_formal(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise LexicalError(f"unexpected character {text[pos:].lstrip()[0]!r} at offset {pos}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


class _FuncRefIR:
    __slots__ = ("channel", "function")

    def __init__(self, channel: str, function: str):
        self.channel = channel
        self.function = function


class _PatternIR:
    __slots__ = ("kind", "args")

    def __init__(self, kind: str, args: list):
        self.kind = kind
        self.args = args


class _FormalParser:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, expected: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise LexicalError("unexpected end of expression")
        if expected is not None and tok != expected:
            raise LexicalError(f"expected {expected!r}, got {tok!r}")
        self.pos += 1
        return tok

    def parse_pattern(self) -> _PatternIR:
        kind = self.take()
        if kind not in PATTERN_KEYWORDS:
            raise LexicalError(f"expected a pattern keyword, got {kind!r}")
        self.take("(")
        args = [self.parse_arg()]
        while self.peek() == ",":
            self.take(",")
            args.append(self.parse_arg())
        self.take(")")
        return _PatternIR(kind, args)

    def parse_arg(self):
        tok = self.peek()
        if tok in PATTERN_KEYWORDS:
            return self.parse_pattern()
        ident = self.take()
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", ident):
            raise LexicalError(f"bad identifier {ident!r}")
        self.take(".")
        fn = self.take()
        if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", fn):
            raise LexicalError(f"bad identifier {fn!r}")
        return _FuncRefIR(ident, fn)


def parse_formal_expression(
    text: str, catalog: Catalog, grammar: GrammarSpec | None = None
) -> Wast:
    """Parse surface text back into a workflow tree, un-inlining chains."""
    grammar = grammar or builtin_wpg()
    parser = _FormalParser(_tokenize_formal(text))
    ir = parser.parse_pattern()
    if parser.peek() is not None:
        raise LexicalError(f"trailing input after expression: {parser.peek()!r}")

    def resolve(ref: _FuncRefIR) -> MacroRef:
        if not catalog.has_channel(ref.channel):
            raise UnknownReferenceError(f"unknown channel {ref.channel}")
        qualified = f"{ref.channel}.{ref.function}"
        if not catalog.has_function(qualified):
            raise UnknownReferenceError(f"unknown function {qualified}")
        return MacroRef(ref.channel, ref.function)

    def check_arity(ir_pat: _PatternIR):
        if ir_pat.kind == "Sequence" and len(ir_pat.args) != 2:
            raise ArityError(
                f"Sequence requires exactly 2 arguments, got {len(ir_pat.args)}"
            )
        if ir_pat.kind == "Parallel_Split" and len(ir_pat.args) < 3:
            raise ArityError(
                "Parallel_Split requires a source and at least 2 actions "
                f"(3+ arguments), got {len(ir_pat.args)}"
            )

    def arg_to_call(arg) -> Node:
        if isinstance(arg, _FuncRefIR):
            return build_call(grammar, resolve(arg))
        check_arity(arg)
        head = arg.args[0]
        if not isinstance(head, _FuncRefIR):
            raise ArityError("a nested pattern's first argument must be a function reference")
        rest = [arg_to_call(a) for a in arg.args[1:]]
        inner = build_pattern(grammar, arg.kind, None, rest)
        return build_call(grammar, resolve(head), inner)

    check_arity(ir)
    head = ir.args[0]
    if not isinstance(head, _FuncRefIR):
        raise ArityError("the trigger position must be a function reference")
    trigger = build_call(grammar, resolve(head))
    actions = [arg_to_call(a) for a in ir.args[1:]]
    w = build_workflow(grammar, build_pattern(grammar, ir.kind, trigger, actions))

    from .engine import validate_wast

    violations = validate_wast(w, catalog)
    if violations:
        raise DataFlowError(violations)
    return w


# -- action sequence text -----------------------------------------------------


def actions_to_text(actions: list[Action]) -> list[str]:
    return [a.text for a in actions]


def text_to_actions(lines: list[str]) -> list[Action]:
    return [parse_action(line) for line in lines]


def write_action_file(sequences: list[list[Action]], path: str | Path) -> None:
    """One canonical action per line; workflows separated by a blank line."""
    blocks = ["\n".join(actions_to_text(seq)) for seq in sequences]
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")


def read_action_file(path: str | Path) -> list[list[Action]]:
    out: list[list[Action]] = []
    block: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            block.append(line)
        elif block:
            out.append(text_to_actions(block))
            block = []
    if block:
        out.append(text_to_actions(block))
    return out


def write_formal_file(expressions: list[str], path: str | Path) -> None:
    """One workflow expression per line."""
    Path(path).write_text("\n".join(expressions) + "\n", encoding="utf-8")


def read_formal_file(path: str | Path) -> list[str]:
    return [
        line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()
    ]


# -- structural scans (no catalog needed) -------------------------------------


def formal_pattern_depth(text: str) -> int:
    """Maximum pattern-nesting depth of a formal expression, by token scan."""
    depth = 0
    max_depth = 0
    tokens = _tokenize_formal(text)
    stack: list[bool] = []
    for i, tok in enumerate(tokens):
        if tok == "(":
            is_pattern = i > 0 and tokens[i - 1] in PATTERN_KEYWORDS
            stack.append(is_pattern)
            if is_pattern:
                depth += 1
                max_depth = max(max_depth, depth)
        elif tok == ")":
            if stack and stack.pop():
                depth -= 1
    return max_depth


def formal_function_refs(text: str) -> list[str]:
    """Qualified Channel.Function references in textual order."""
    tokens = _tokenize_formal(text)
    refs = []
    for i, tok in enumerate(tokens):
        if tok == "." and 0 < i < len(tokens) - 1:
            refs.append(f"{tokens[i - 1]}.{tokens[i + 1]}")
    return refs

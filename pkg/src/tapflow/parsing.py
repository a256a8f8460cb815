"""Grammar-constrained semantic parsing from utterances to workflow trees.

The sequence probability factorizes per transition: each step's scorer
distributes probability over exactly the legal actions, so every complete
tree reachable by the transition system gets positive mass and the masses
telescope to one. Inference is beam search over legal actions only; the
baseline scorer is a log-linear model over shallow lexical-overlap and
structural-context features, trained by full-batch gradient ascent on the
(concave) log-likelihood of gold transition sequences.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from .catalog import Catalog, MacroFunction
from .dataset import Example, Status
from .engine import (
    Action,
    ActionKind,
    TransitionState,
    Wast,
    apply_action,
    init_state,
    is_complete,
    legal_actions,
    oracle_actions,
    replay,
    selected_macros,
    structurally_equal,
)
from .errors import (
    EmptyUtteranceError,
    NoCompleteHypothesisError,
    NonFiniteLossError,
    ScorerNormalizationError,
    TapflowError,
)
from .grammar import Cardinality, GrammarSpec, TERMINAL_TYPE, builtin_wpg
from .surface import text_to_actions

NEG_INF = -1e18
DEFAULT_MAX_STEPS = 400  # ~4x the node budget of a depth-capped workflow
_NORM_TOL = 1e-6


# -- tokenization ---------------------------------------------------------------


@dataclass(frozen=True)
class NLUtterance:
    raw: str
    tokens: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.tokens)


_WORD_RE = re.compile(r"[a-z0-9_]+")


def tokenize(text: str) -> NLUtterance:
    """Lowercase, split on whitespace/punctuation; underscores survive."""
    tokens = tuple(_WORD_RE.findall(text.lower()))
    if not tokens:
        raise EmptyUtteranceError(f"no tokens in {text!r}")
    return NLUtterance(text, tokens)


STOPWORDS = frozenset(
    "a an the to with by on in my of at is as and if this that it i me".split()
)

# connective head words -> structural cue classes
_CUE_WORDS = {
    "then": "first",
    "next": "first",
    "after": "first",
    "separately": "parallel",
    "parallel": "parallel",
    "same": "parallel",
    "simultaneously": "parallel",
    "finally": "final",
    "lastly": "final",
}


# -- feature space ----------------------------------------------------------------

AKEYS = (
    "apply:Workflow",
    "apply:Sequence",
    "apply:Parallel_Split",
    "apply:Call",
    "select:channel",
    "select:function",
    "stop",
)
PREV_KEYS = ("none", "apply:Workflow", "apply:Sequence", "apply:Parallel_Split",
             "apply:Call", "select", "stop")
SLOT_KEYS = ("root", "pattern", "trigger", "action_single", "action_seq",
             "channel", "function", "next")
CONN_KEYS = ("first", "parallel", "final", "none")
CONN_AKEYS = ("apply:Sequence", "apply:Parallel_Split", "apply:Call", "stop")
SEL_FEATURES = ("sel:name_overlap", "sel:phrase_overlap", "sel:phrase_uncovered",
                "sel:earliness", "sel:phrase_present", "sel:at_next_phrase")
CONN2_AKEYS = ("apply:Sequence", "apply:Parallel_Split")
REACH_AKEYS = ("apply:Sequence", "apply:Parallel_Split", "apply:Call", "stop")
ROOTEV_AKEYS = ("apply:Sequence", "apply:Parallel_Split")
DEPTH_SCALE = 6.0


def _fragments(*names: str) -> set[str]:
    out: set[str] = set()
    for name in names:
        out.update(p.lower() for p in name.split("_") if p)
    return out


def _content_tokens(f: MacroFunction) -> set[str]:
    toks = set(_WORD_RE.findall(f.phrase.lower())) - STOPWORDS
    toks |= _fragments(f.channel, f.name)
    return toks - STOPWORDS


class FeatureSpace:
    """Fixed, catalog-derived feature enumeration for the baseline scorer."""

    def __init__(self, catalog: Catalog):
        self.catalog = catalog
        names: list[str] = []
        names += [f"bias:{a}" for a in AKEYS]
        names += list(SEL_FEATURES)
        names += [f"conn:{c}x{a}" for c in CONN_KEYS for a in CONN_AKEYS]
        names += [f"conn2:{c}x{a}" for c in CONN_KEYS for a in CONN2_AKEYS]
        names += [f"reach:{r}x{a}" for r in ("yes", "no") for a in REACH_AKEYS]
        names += [f"rootev:{r}x{a}" for r in ("yes", "no") for a in ROOTEV_AKEYS]
        names += ["uncov:stop", "uncov:extend", "cov:stop"]
        names += [f"prev:{p}x{a}" for p in PREV_KEYS for a in AKEYS]
        names += [f"slot:{s}x{a}" for s in SLOT_KEYS for a in AKEYS]
        names += [f"depth:{a}" for a in AKEYS]
        self.feature_names = names
        self.index = {name: i for i, name in enumerate(names)}
        self.dim = len(names)

        self.content: dict[str, set[str]] = {}
        self.name_frags: dict[str, set[str]] = {}
        self.phrase_tokens: dict[str, tuple[str, ...]] = {}
        for f in catalog.functions():
            self.content[f.qualified] = _content_tokens(f)
            self.name_frags[f.qualified] = _fragments(f.channel, f.name)
            self.phrase_tokens[f.qualified] = tuple(_WORD_RE.findall(f.phrase.lower()))
        self.channel_functions = {
            ch.name: [f.qualified for f in ch.functions] for ch in catalog.channels
        }


def _action_key(action: Action, slot) -> str:
    if action.kind is ActionKind.APPLY:
        return f"apply:{action.token}"
    if action.kind is ActionKind.STOP:
        return "stop"
    return "select:channel" if slot.chosen_channel is None else "select:function"


def _prev_key(history: tuple[Action, ...]) -> str:
    if not history:
        return "none"
    last = history[-1]
    if last.kind is ActionKind.APPLY:
        return f"apply:{last.token}"
    if last.kind is ActionKind.SELECT:
        return "select"
    return "stop"


def _slot_key(slot) -> str:
    if slot.owner is None:
        return "root"
    t = slot.fdef.type_name
    if t == TERMINAL_TYPE:
        return "channel" if slot.chosen_channel is None else "function"
    if t == "wpg":
        return "pattern" if slot.owner.ctor == "Workflow" else "next"
    if slot.fdef.name == "trigger":
        return "trigger"
    return "action_seq" if slot.fdef.cardinality is Cardinality.SEQUENTIAL else "action_single"


def _slot_depth(slot) -> int:
    depth = 0
    node = slot.owner
    while node is not None:
        if node.is_pattern:
            depth += 1
        node = node.parent
    return depth


def _find_span(
    phrase: tuple[str, ...], tokens: tuple[str, ...], consumed: list[bool]
) -> int | None:
    """First start of ``phrase`` as a contiguous, fully-unconsumed token run."""
    if not phrase or len(phrase) > len(tokens):
        return None
    for start in range(len(tokens) - len(phrase) + 1):
        if consumed[start]:
            continue
        ok = True
        for j, p in enumerate(phrase):
            if tokens[start + j] != p or consumed[start + j]:
                ok = False
                break
        if ok:
            return start
    return None


class _StepContext:
    """Per-step utterance/tree alignment signals shared by all candidates.

    Already-selected functions claim their phrase spans in the utterance
    (greedy, in tree pre-order, which is the template's textual order);
    candidates are scored against the unclaimed remainder.
    """

    def __init__(self, fs: FeatureSpace, utt: NLUtterance, state: TransitionState):
        self.fs = fs
        self.utt = utt
        self.token_set = set(utt.tokens)
        selected = [m.qualified for m in selected_macros(state.root)]
        self.selected = set(selected)
        self.consumed = [False] * utt.n
        self.covered_content: set[str] = set()
        for q in selected:
            self.covered_content |= fs.content.get(q, set())
            start = _find_span(fs.phrase_tokens.get(q, ()), utt.tokens, self.consumed)
            if start is not None:
                for i in range(start, start + len(fs.phrase_tokens[q])):
                    self.consumed[i] = True
        remaining = [
            i
            for i, t in enumerate(utt.tokens)
            if not self.consumed[i] and t not in STOPWORDS and t not in _CUE_WORDS
        ]
        self.uncovered_frac = len(remaining) / utt.n
        self.covered_frac = sum(self.consumed) / utt.n
        self.next_conn, self.next_conn2 = self._connectives(remaining)
        # earliest unconsumed phrase span over the whole vocabulary, and the
        # functions whose phrase starts there
        self.next_phrase_start: int | None = None
        self.next_phrase_functions: set[str] = set()
        for q, phrase in fs.phrase_tokens.items():
            start = _find_span(phrase, utt.tokens, self.consumed)
            if start is None:
                continue
            if self.next_phrase_start is None or start < self.next_phrase_start:
                self.next_phrase_start = start
                self.next_phrase_functions = {q}
            elif start == self.next_phrase_start:
                self.next_phrase_functions.add(q)

    def _connectives(self, remaining: list[int]) -> tuple[str, str]:
        # the sentence frame puts the trigger clause before the first cue
        # word, so content there never describes an action
        first_cue = next(
            (i for i, t in enumerate(self.utt.tokens) if t in _CUE_WORDS), None
        )
        if first_cue is not None:
            remaining = [i for i in remaining if i > first_cue]
        if not remaining:
            return "none", "none"
        first = remaining[0]
        conn1 = "none"
        for i in range(first - 1, -1, -1):
            cue = _CUE_WORDS.get(self.utt.tokens[i])
            if cue is not None:
                conn1 = cue
                break
        conn2 = "none"
        for i in range(first + 1, self.utt.n):
            cue = _CUE_WORDS.get(self.utt.tokens[i])
            if cue is not None:
                conn2 = cue
                break
        return conn1, conn2

    def root_split_evidence(self) -> bool | None:
        """At the root pattern decision: does the (not yet selected) trigger
        feed any phrase beyond the first action phrase? Direct fan-out from
        the trigger is what distinguishes a root split from a chain."""
        first_cue = next(
            (i for i, t in enumerate(self.utt.tokens) if t in _CUE_WORDS), None
        )
        if first_cue is None:
            return None
        catalog = self.fs.catalog
        spans: dict[str, int] = {}
        for q, phrase in self.fs.phrase_tokens.items():
            start = _find_span(phrase, self.utt.tokens, self.consumed)
            if start is not None:
                spans[q] = start
        trig_fns = [q for q, s in spans.items() if s < first_cue]
        action_starts = sorted(s for s in spans.values() if s > first_cue)
        if not trig_fns or len(action_starts) < 2:
            return None
        later = [q for q, s in spans.items() if s > action_starts[0]]
        for t in trig_fns:
            tf = catalog.function(t)
            for q in later:
                if catalog.feeds(tf, catalog.function(q)):
                    return True
        return False

    def next_phrase_reachable(self, source_qualified: str, chained: bool) -> bool | None:
        """Whether the earliest unclaimed phrase's function can follow
        ``source`` here; None when there is no unclaimed phrase."""
        if self.next_phrase_start is None:
            return None
        catalog = self.fs.catalog
        if not catalog.has_function(source_qualified):
            return None
        src = catalog.function(source_qualified)
        for q in self.next_phrase_functions:
            g = catalog.function(q)
            if chained:
                if catalog.chainable(src, g):
                    return True
            elif catalog.feeds(src, g):
                return True
        return False

    def select_features(self, qualified: str) -> dict[str, float]:
        fs = self.fs
        out: dict[str, float] = {}
        frags = fs.name_frags.get(qualified, set())
        if frags:
            out["sel:name_overlap"] = len(frags & self.token_set) / len(frags)
        content = fs.content.get(qualified, set())
        unclaimed_types = {
            t
            for i, t in enumerate(self.utt.tokens)
            if not self.consumed[i]
        }
        if content:
            hit = content & self.token_set
            out["sel:phrase_overlap"] = len(hit) / len(content)
            out["sel:phrase_uncovered"] = len(hit & unclaimed_types) / len(content)
        start = _find_span(fs.phrase_tokens.get(qualified, ()), self.utt.tokens, self.consumed)
        if start is not None:
            out["sel:phrase_present"] = 1.0
            out["sel:earliness"] = (self.utt.n - start) / self.utt.n
            if start == self.next_phrase_start:
                out["sel:at_next_phrase"] = 1.0
        return out


def featurize_step(
    fs: FeatureSpace,
    utt: NLUtterance,
    state: TransitionState,
    legal: list[Action],
    history: tuple[Action, ...],
) -> list[dict[int, float]]:
    """Sparse feature rows (index -> value), one per legal action."""
    slot = state.frontier[0]
    ctx = _StepContext(fs, utt, state)
    prev = _prev_key(history)
    skey = _slot_key(slot)
    depth_val = min(_slot_depth(slot), DEPTH_SCALE) / DEPTH_SCALE
    idx = fs.index

    # whether the next unclaimed phrase can follow the flow source that any
    # extension at this slot would have to feed it from
    reach: bool | None = None
    rootev: bool | None = None
    if skey == "next" and slot.owner.macro is not None:
        reach = ctx.next_phrase_reachable(slot.owner.macro.qualified, chained=True)
    elif skey == "action_seq":
        from .engine import _pattern_source

        src = _pattern_source(slot.owner)
        if src is not None:
            reach = ctx.next_phrase_reachable(src.qualified, slot.owner.is_chained)
    elif skey == "pattern":
        rootev = ctx.root_split_evidence()

    rows: list[dict[int, float]] = []
    for a in legal:
        akey = _action_key(a, slot)
        row: dict[int, float] = {
            idx[f"bias:{akey}"]: 1.0,
            idx[f"prev:{prev}x{akey}"]: 1.0,
            idx[f"slot:{skey}x{akey}"]: 1.0,
        }
        if depth_val:
            row[idx[f"depth:{akey}"]] = depth_val
        if akey in CONN_AKEYS:
            row[idx[f"conn:{ctx.next_conn}x{akey}"]] = 1.0
        if akey in CONN2_AKEYS:
            row[idx[f"conn2:{ctx.next_conn2}x{akey}"]] = 1.0
        if reach is not None and akey in REACH_AKEYS:
            row[idx[f"reach:{'yes' if reach else 'no'}x{akey}"]] = 1.0
        if rootev is not None and akey in ROOTEV_AKEYS:
            row[idx[f"rootev:{'yes' if rootev else 'no'}x{akey}"]] = 1.0
        if a.kind is ActionKind.STOP:
            if ctx.uncovered_frac:
                row[idx["uncov:stop"]] = ctx.uncovered_frac
            if ctx.covered_frac:
                row[idx["cov:stop"]] = ctx.covered_frac
        elif a.kind is ActionKind.APPLY and a.token != "Workflow":
            if ctx.uncovered_frac:
                row[idx["uncov:extend"]] = ctx.uncovered_frac
        if a.kind is ActionKind.SELECT:
            if slot.chosen_channel is None:
                feats: dict[str, float] = {}
                for q in fs.channel_functions.get(a.token, []):
                    for name, val in ctx.select_features(q).items():
                        feats[name] = max(feats.get(name, 0.0), val)
            else:
                feats = ctx.select_features(f"{slot.chosen_channel}.{a.token}")
            for name, val in feats.items():
                if val:
                    row[idx[name]] = val
        rows.append(row)
    return rows


# -- scorers --------------------------------------------------------------------


class Scorer(Protocol):
    def score(
        self,
        utt: NLUtterance,
        state: TransitionState,
        legal: list[Action],
        history: tuple[Action, ...],
    ) -> np.ndarray: ...


class UniformScorer:
    """Equal probability over the legal set."""

    def score(self, utt, state, legal, history) -> np.ndarray:
        return np.full(len(legal), -np.log(len(legal)))


class OracleScorer:
    """Probability one on the gold continuation; uniform off the gold prefix."""

    def __init__(self, gold: list[Action]):
        self.gold = list(gold)

    def score(self, utt, state, legal, history) -> np.ndarray:
        t = len(history)
        if t < len(self.gold) and list(history) == self.gold[:t] and self.gold[t] in legal:
            out = np.full(len(legal), NEG_INF)
            out[legal.index(self.gold[t])] = 0.0
            return out
        return np.full(len(legal), -np.log(len(legal)))


@dataclass
class BaselineScorerModel:
    feature_names: list[str]
    weights: np.ndarray
    version: str = "1"
    tokenizer: str = "v1"
    dev_history: list[float] = field(default_factory=list, repr=False, compare=False)
    train_history: list[float] = field(default_factory=list, repr=False, compare=False)

    def save(self, path: str | Path) -> None:
        data = {
            "version": self.version,
            "feature_names": list(self.feature_names),
            "weights": [float(x) for x in self.weights],
            "tokenizer": self.tokenizer,
        }
        Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BaselineScorerModel":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        names = list(data["feature_names"])
        weights = np.asarray(data["weights"], dtype=float)
        if len(names) != len(weights):
            raise TapflowError("model file: feature_names and weights length mismatch")
        return cls(
            feature_names=names,
            weights=weights,
            version=str(data.get("version", "1")),
            tokenizer=str(data.get("tokenizer", "v1")),
        )


def zero_model(fs: FeatureSpace) -> BaselineScorerModel:
    return BaselineScorerModel(list(fs.feature_names), np.zeros(fs.dim))


class BaselineScorer:
    """Log-linear per-step distribution over the legal action set."""

    def __init__(self, model: BaselineScorerModel, catalog: Catalog):
        self.model = model
        self.fs = FeatureSpace(catalog)
        if list(self.fs.feature_names) != list(model.feature_names):
            raise TapflowError("model feature space does not match this catalog version")

    def score(self, utt, state, legal, history) -> np.ndarray:
        rows = featurize_step(self.fs, utt, state, legal, history)
        w = self.model.weights
        scores = np.array(
            [sum(w[i] * v for i, v in row.items()) for row in rows], dtype=float
        )
        return scores - _logsumexp(scores)


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    if m <= NEG_INF:
        return m
    return m + float(np.log(np.sum(np.exp(x - m))))


# -- sequence probability ----------------------------------------------------------


def sequence_log_prob(
    w: Wast,
    utt: NLUtterance,
    scorer: Scorer,
    grammar: GrammarSpec,
    catalog: Catalog,
    check_normalization: bool = True,
) -> float:
    """Sum of per-step log probabilities along the oracle action sequence."""
    total = 0.0
    state = init_state(grammar)
    history: tuple[Action, ...] = ()
    for a in oracle_actions(w):
        legal = legal_actions(state, catalog)
        lps = scorer.score(utt, state, legal, history)
        if check_normalization:
            z = _logsumexp(lps)
            if abs(z) > _NORM_TOL:
                raise ScorerNormalizationError(
                    f"legal-set probabilities sum to exp({z:.3e}) != 1"
                )
        try:
            total += float(lps[legal.index(a)])
        except ValueError:
            raise TapflowError(
                f"oracle action {a.text} is not legal under this catalog"
            ) from None
        state = apply_action(state, a, catalog, inplace=True)
        history = history + (a,)
    return total


# -- beam search --------------------------------------------------------------------


@dataclass
class Hypothesis:
    state: TransitionState
    actions: tuple[Action, ...]
    log_score: float

    @property
    def texts(self) -> tuple[str, ...]:
        return tuple(a.text for a in self.actions)


def beam_search(
    utt: NLUtterance,
    grammar: GrammarSpec,
    catalog: Catalog,
    scorer: Scorer,
    beam_width: int | None = 5,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> list[tuple[Wast, float]]:
    """Top complete workflows by factorized log score, best first.

    Standard beam: per step, all expansions of live hypotheses compete for
    beam_width slots; completed ones are set aside and the rest stay live.
    ``beam_width=None`` disables pruning (exhaustive search; only sensible on
    small catalogs). Ties break on the canonical action text sequence, so
    results are reproducible, and width one reduces to greedy decoding.
    """
    if beam_width is not None and beam_width < 1:
        raise TapflowError("beam_width must be >= 1")
    beams = [Hypothesis(init_state(grammar), (), 0.0)]
    finished: list[Hypothesis] = []
    for _ in range(max_steps):
        if not beams:
            break
        candidates: list[tuple[float, tuple[str, ...], Hypothesis, Action]] = []
        for h in beams:
            legal = legal_actions(h.state, catalog)
            lps = scorer.score(utt, h.state, legal, h.actions)
            for a, lp in zip(legal, lps):
                lp = float(lp)
                if lp <= NEG_INF:
                    continue
                candidates.append(
                    (h.log_score + lp, h.texts + (a.text,), h, a)
                )
        candidates.sort(key=lambda c: (-c[0], c[1]))
        if beam_width is not None:
            candidates = candidates[:beam_width]
        beams = []
        for score, _texts, h, a in candidates:
            h2 = Hypothesis(
                apply_action(h.state, a, catalog), h.actions + (a,), score
            )
            if is_complete(h2.state):
                finished.append(h2)
            else:
                beams.append(h2)
        # per-step log probabilities are <= 0, so live scores only decay:
        # once enough finished strictly outrank every live beam, stop early
        if beam_width is not None and len(finished) >= beam_width and beams:
            kth = sorted(finished, key=lambda h: -h.log_score)[beam_width - 1].log_score
            if max(h.log_score for h in beams) < kth:
                break
    if not finished:
        raise NoCompleteHypothesisError(
            f"no complete hypothesis within {max_steps} steps"
        )
    finished.sort(key=lambda h: (-h.log_score, h.texts))
    if beam_width is not None:
        finished = finished[:beam_width]
    return [(Wast.from_state(h.state), h.log_score) for h in finished]


# -- training -------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 200
    l2: float = 1e-4
    seed: int = 0


@dataclass
class EncodedDataset:
    rows: np.ndarray        # (R, dim) stacked candidate features
    seg_starts: np.ndarray  # (S,) row offset of each step
    seg_ids: np.ndarray     # (R,) step index per row
    gold_rows: np.ndarray   # (S,) absolute row index of the gold action
    n_steps: int


def encode_examples(
    examples: list[Example],
    fs: FeatureSpace,
    grammar: GrammarSpec,
    catalog: Catalog,
) -> EncodedDataset:
    """Freeze per-step candidate features for gold transition sequences."""
    all_rows: list[dict[int, float]] = []
    seg_starts: list[int] = []
    gold_rows: list[int] = []
    for ex in examples:
        utt = tokenize(ex.nl)
        actions = text_to_actions(list(ex.actions))
        state = init_state(grammar)
        history: tuple[Action, ...] = ()
        for a in actions:
            legal = legal_actions(state, catalog)
            rows = featurize_step(fs, utt, state, legal, history)
            seg_starts.append(len(all_rows))
            gold_rows.append(len(all_rows) + legal.index(a))
            all_rows.extend(rows)
            state = apply_action(state, a, catalog, inplace=True)
            history = history + (a,)
    dense = np.zeros((len(all_rows), fs.dim))
    for r, row in enumerate(all_rows):
        for i, v in row.items():
            dense[r, i] = v
    seg_starts_arr = np.asarray(seg_starts, dtype=np.int64)
    seg_sizes = np.diff(np.append(seg_starts_arr, len(all_rows)))
    seg_ids = np.repeat(np.arange(len(seg_starts)), seg_sizes)
    return EncodedDataset(
        rows=dense,
        seg_starts=seg_starts_arr,
        seg_ids=seg_ids,
        gold_rows=np.asarray(gold_rows, dtype=np.int64),
        n_steps=len(seg_starts),
    )


def loglik_and_grad(
    weights: np.ndarray, enc: EncodedDataset, l2: float = 0.0
) -> tuple[float, np.ndarray]:
    """Mean per-step log-likelihood (minus L2) and its gradient."""
    scores = enc.rows @ weights
    m = np.maximum.reduceat(scores, enc.seg_starts)
    ex = np.exp(scores - m[enc.seg_ids])
    z = np.add.reduceat(ex, enc.seg_starts)
    log_z = m + np.log(z)
    ll = float(scores[enc.gold_rows].sum() - log_z.sum()) / enc.n_steps
    probs = ex / z[enc.seg_ids]
    resid = -probs
    resid[enc.gold_rows] += 1.0
    grad = (enc.rows.T @ resid) / enc.n_steps
    if l2:
        ll -= 0.5 * l2 * float(weights @ weights)
        grad = grad - l2 * weights
    return ll, grad


def train_scorer(
    train_examples: list[Example],
    dev_examples: list[Example],
    config: TrainConfig,
    grammar: GrammarSpec | None = None,
    catalog: Catalog | None = None,
    verbose: bool = False,
) -> BaselineScorerModel:
    """Full-batch gradient ascent on the per-step log-likelihood."""
    if not train_examples:
        raise TapflowError("cannot train on an empty example list")
    if catalog is None:
        raise TapflowError("train_scorer requires a catalog")
    grammar = grammar or builtin_wpg()
    fs = FeatureSpace(catalog)
    enc = encode_examples(train_examples, fs, grammar, catalog)
    dev_enc = (
        encode_examples(dev_examples, fs, grammar, catalog) if dev_examples else None
    )
    w = np.zeros(fs.dim)
    train_history: list[float] = []
    dev_history: list[float] = []
    for epoch in range(config.epochs):
        ll, grad = loglik_and_grad(w, enc, config.l2)
        if not np.isfinite(ll) or not np.all(np.isfinite(grad)):
            raise NonFiniteLossError(
                f"non-finite objective at epoch {epoch} "
                f"(lr={config.learning_rate}, l2={config.l2})"
            )
        w = w + config.learning_rate * grad
        train_history.append(ll)
        if dev_enc is not None:
            dev_ll, _ = loglik_and_grad(w, dev_enc, 0.0)
            dev_history.append(dev_ll)
            if verbose:
                print(f"epoch {epoch + 1}: train_ll={ll:.6f} dev_ll={dev_ll:.6f}")
        elif verbose:
            print(f"epoch {epoch + 1}: train_ll={ll:.6f}")
    model = BaselineScorerModel(list(fs.feature_names), w)
    model.train_history = train_history
    model.dev_history = dev_history
    return model


# -- evaluation ------------------------------------------------------------------------


@dataclass
class ParserBundle:
    grammar: GrammarSpec
    catalog: Catalog
    scorer: Scorer | None = None
    oracle: bool = False
    beam_width: int | None = 5
    max_steps: int = DEFAULT_MAX_STEPS
    allow_synthetic: bool = False

    def scorer_for(self, example: Example) -> Scorer:
        if self.oracle:
            return OracleScorer(text_to_actions(list(example.actions)))
        if self.scorer is None:
            raise TapflowError("bundle has neither a scorer nor oracle mode")
        return self.scorer


@dataclass
class EvalMetrics:
    exact_match: float
    action_accuracy: float
    per_depth: dict[int, float]
    n: int

    def to_dict(self) -> dict:
        return {
            "exact_match": self.exact_match,
            "action_accuracy": self.action_accuracy,
            "per_depth": {str(k): v for k, v in sorted(self.per_depth.items())},
            "n": self.n,
        }


def evaluate(examples: list[Example], bundle: ParserBundle) -> EvalMetrics:
    """Exact-match and teacher-forced action accuracy for top-1 beam output."""
    if not examples:
        raise TapflowError("evaluation on an empty example set")
    if not bundle.allow_synthetic:
        unreviewed = [e.id for e in examples if e.status is not Status.REVIEWED]
        if unreviewed:
            raise TapflowError(
                f"{len(unreviewed)} examples lack reviewed descriptions "
                "(pass allow_synthetic to evaluate on synthetic text)"
            )
    exact = 0
    correct_steps = 0
    total_steps = 0
    depth_hits: dict[int, list[int]] = {}
    for ex in examples:
        utt = tokenize(ex.nl)
        gold_actions = text_to_actions(list(ex.actions))
        gold = Wast.from_state(replay(gold_actions, bundle.grammar, bundle.catalog))
        scorer = bundle.scorer_for(ex)
        try:
            results = beam_search(
                utt, bundle.grammar, bundle.catalog, scorer,
                bundle.beam_width, bundle.max_steps,
            )
            hit = structurally_equal(results[0][0].root, gold.root)
        except NoCompleteHypothesisError:
            hit = False
        exact += hit
        depth_hits.setdefault(ex.depth(), []).append(int(hit))

        state = init_state(bundle.grammar)
        history: tuple[Action, ...] = ()
        for a in gold_actions:
            legal = legal_actions(state, bundle.catalog)
            lps = scorer.score(utt, state, legal, history)
            if legal[int(np.argmax(lps))] == a:
                correct_steps += 1
            total_steps += 1
            state = apply_action(state, a, bundle.catalog, inplace=True)
            history = history + (a,)
    return EvalMetrics(
        exact_match=exact / len(examples),
        action_accuracy=correct_steps / max(1, total_steps),
        per_depth={d: sum(h) / len(h) for d, h in depth_hits.items()},
        n=len(examples),
    )

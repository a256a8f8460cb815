"""Acceptance suite: one test per exit criterion, each printing a PASS line
with its elapsed time (run with ``pytest -s`` to see them inline)."""

import math
import random
import time

import numpy as np

from conftest import W0_ACTION_LINES, W0_FORMAL
from tapflow.cli import make_records
from tapflow.dataset import Split, split_dataset
from tapflow.engine import (
    ActionKind,
    Wast,
    init_state,
    is_complete,
    node_count,
    oracle_actions,
    replay,
    validate_wast,
)
from tapflow.genflow import GenConfig, enumerate_workflows, generate_workflow
from tapflow.parsing import (
    BaselineScorer,
    BaselineScorerModel,
    FeatureSpace,
    ParserBundle,
    TrainConfig,
    UniformScorer,
    encode_examples,
    evaluate,
    loglik_and_grad,
    sequence_log_prob,
    tokenize,
    train_scorer,
)
from tapflow.surface import parse_formal_expression, to_formal_expression


class _Criterion:
    def __init__(self, name: str, budget_s: float):
        self.name = name
        self.budget_s = budget_s

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        status = "PASS" if exc_type is None else "FAIL"
        print(f"{status} {self.name} ({elapsed:.2f}s / budget {self.budget_s:.0f}s)")
        if exc_type is None:
            assert elapsed < self.budget_s, f"{self.name} exceeded {self.budget_s}s"
        return False


def test_expansion_table_reproduction(grammar, demo_catalog, w0):
    with _Criterion("expansion-table reproduction", 1.0):
        actions = oracle_actions(w0)
        assert len(actions) == 20
        assert [a.text for a in actions] == W0_ACTION_LINES  # one-to-one, in order
        kinds = [a.kind for a in actions]
        assert kinds.count(ActionKind.APPLY) == 7  # 3 pattern ctors + 4 Calls
        assert kinds.count(ActionKind.SELECT) == 8
        assert kinds.count(ActionKind.STOP) == 5
        rebuilt = Wast.from_state(replay(actions, grammar, demo_catalog))
        assert rebuilt == w0


def test_reference_serialization(grammar, demo_catalog, w0):
    with _Criterion("reference-expression serialization", 1.0):
        assert to_formal_expression(w0) == W0_FORMAL
        assert parse_formal_expression(W0_FORMAL, demo_catalog, grammar) == w0


def test_roundtrip_suite(grammar, demo_catalog):
    with _Criterion("1,000-seed round-trip suite", 10.0):
        for seed in range(1000):
            w = generate_workflow(demo_catalog, GenConfig(seed=seed), grammar)
            text = to_formal_expression(w)
            assert parse_formal_expression(text, demo_catalog, grammar) == w
            assert Wast.from_state(replay(oracle_actions(w), grammar, demo_catalog)) == w


def _check_state_invariants(state):
    assert state.step == len(state.actions)
    for slot in state.frontier:
        assert not slot.closed
    # every tree node has exactly one parent (reachable without sharing)
    seen = set()

    def walk(node):
        assert id(node) not in seen, "shared subtree"
        seen.add(id(node))
        for s in node.slots.values():
            for v in s.values:
                if hasattr(v, "slots"):
                    assert v.parent is node
                    walk(v)

    if state.root is not None:
        walk(state.root)


def test_legality_fuzz(grammar, demo_catalog):
    from tapflow.engine import apply_action
    from tapflow.genflow import _capped_actions

    with _Criterion("10,000-action legality fuzz", 30.0):
        rng = random.Random(20260810)
        applied = 0
        runs = 0
        while applied < 10_000:
            state = init_state(grammar)
            while not is_complete(state):
                choices = _capped_actions(state, demo_catalog, max_depth=6, max_branch=4)
                assert choices, "reachable state with no legal action"
                state = apply_action(state, rng.choice(choices), demo_catalog,
                                     inplace=True)
                _check_state_invariants(state)
                applied += 1
            w = Wast.from_state(state)
            assert validate_wast(w, demo_catalog) == []
            assert node_count(w) >= 3
            runs += 1
        assert runs > 0


def test_distribution_sums_to_one(grammar, fig_catalog):
    with _Criterion("factorized-distribution mass check", 60.0):
        flows = list(enumerate_workflows(fig_catalog, max_depth=3))
        assert len(flows) == 5  # chain structure bottoms out at depth 2
        utt = tokenize("if anything happens send me everything")
        fs = FeatureSpace(fig_catalog)
        rng = np.random.default_rng(1234)
        model = BaselineScorerModel(list(fs.feature_names), rng.normal(0, 0.5, fs.dim))
        for scorer in (BaselineScorer(model, fig_catalog), UniformScorer()):
            total = sum(
                math.exp(sequence_log_prob(w, utt, scorer, grammar, fig_catalog))
                for w in flows
            )
            assert abs(total - 1.0) <= 1e-6


def test_gradient_check(grammar, demo_catalog):
    with _Criterion("analytic-vs-numeric gradient check", 30.0):
        records = make_records(demo_catalog, 6, GenConfig(seed=321))
        fs = FeatureSpace(demo_catalog)
        enc = encode_examples(records, fs, grammar, demo_catalog)
        rng = np.random.default_rng(5150)
        h = 1e-5
        for _ in range(20):
            w = rng.normal(0, 0.5, fs.dim)
            _, analytic = loglik_and_grad(w, enc, l2=1e-3)
            coords = rng.choice(fs.dim, size=10, replace=False)
            numeric = np.zeros(len(coords))
            for j, c in enumerate(coords):
                wp, wm = w.copy(), w.copy()
                wp[c] += h
                wm[c] -= h
                numeric[j] = (
                    loglik_and_grad(wp, enc, l2=1e-3)[0]
                    - loglik_and_grad(wm, enc, l2=1e-3)[0]
                ) / (2 * h)
            sub = analytic[coords]
            denom = max(np.linalg.norm(sub), np.linalg.norm(numeric), 1e-12)
            assert np.linalg.norm(sub - numeric) / denom <= 1e-4


def test_end_to_end_parsing(grammar, demo_catalog):
    with _Criterion("end-to-end training and parsing", 300.0):
        assert len(demo_catalog.channels) >= 8
        records = make_records(demo_catalog, 500, GenConfig(seed=101))
        records = split_dataset(records, (0.8, 0.1, 0.1), seed=13)
        train = [e for e in records if e.split is Split.TRAIN]
        dev = [e for e in records if e.split is Split.DEV]
        test = [e for e in records if e.split is Split.TEST]
        model = train_scorer(
            train, dev, TrainConfig(learning_rate=0.5, epochs=300, l2=1e-5),
            grammar, demo_catalog,
        )
        scorer = BaselineScorer(model, demo_catalog)
        metrics = evaluate(
            test,
            ParserBundle(grammar, demo_catalog, scorer=scorer, beam_width=5,
                         allow_synthetic=True),
        )
        print(f"  exact_match={metrics.exact_match:.3f} "
              f"action_accuracy={metrics.action_accuracy:.4f} n={metrics.n}")
        assert metrics.exact_match >= 0.90


def test_oracle_scorer_sanity(grammar, demo_catalog):
    with _Criterion("oracle-scorer exact-match sanity", 10.0):
        records = make_records(demo_catalog, 40, GenConfig(seed=55))
        metrics = evaluate(
            records,
            ParserBundle(grammar, demo_catalog, oracle=True, beam_width=5,
                         allow_synthetic=True),
        )
        assert metrics.exact_match == 1.0
        assert metrics.action_accuracy == 1.0

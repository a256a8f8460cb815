import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import W0_NL
from tapflow.cli import make_records
from tapflow.dataset import Status
from tapflow.engine import (
    Wast,
    apply_action,
    init_state,
    is_complete,
    legal_actions,
    oracle_actions,
    structurally_equal,
)
from tapflow.errors import (
    EmptyUtteranceError,
    NoCompleteHypothesisError,
    NonFiniteLossError,
    ScorerNormalizationError,
    TapflowError,
)
from tapflow.genflow import GenConfig, enumerate_workflows
from tapflow.parsing import (
    BaselineScorer,
    BaselineScorerModel,
    FeatureSpace,
    OracleScorer,
    ParserBundle,
    TrainConfig,
    UniformScorer,
    beam_search,
    encode_examples,
    evaluate,
    loglik_and_grad,
    sequence_log_prob,
    tokenize,
    train_scorer,
    zero_model,
)


def random_model(fs: FeatureSpace, seed: int = 0, scale: float = 0.5):
    rng = np.random.default_rng(seed)
    return BaselineScorerModel(list(fs.feature_names), rng.normal(0, scale, fs.dim))


# -- tokenize ------------------------------------------------------------------


def test_tokenize_basic():
    utt = tokenize("Send Text to Me")
    assert utt.tokens == ("send", "text", "to", "me")
    assert utt.n == 4


def test_tokenize_punctuation():
    assert tokenize("  A  b. ").tokens == ("a", "b")


def test_tokenize_preserves_underscores():
    assert tokenize("run Send_Text_to_Me now").tokens == ("run", "send_text_to_me", "now")


def test_tokenize_empty():
    with pytest.raises(EmptyUtteranceError):
        tokenize("  .,! ")


@settings(max_examples=50, deadline=None)
@given(st.text(min_size=1, max_size=60))
def test_tokenize_idempotent_on_joined_output(text):
    try:
        first = tokenize(text)
    except EmptyUtteranceError:
        return
    again = tokenize(" ".join(first.tokens))
    assert again.tokens == first.tokens


# -- sequence probability --------------------------------------------------------


def test_uniform_sequence_log_prob_is_neg_sum_log_counts(grammar, fig_catalog, w0):
    # independent oracle: count legal actions per step along the gold path
    state = init_state(grammar)
    expected = 0.0
    for a in oracle_actions(w0):
        expected -= math.log(len(legal_actions(state, fig_catalog)))
        state = apply_action(state, a, fig_catalog, inplace=True)
    utt = tokenize(W0_NL)
    got = sequence_log_prob(w0, utt, UniformScorer(), grammar, fig_catalog)
    assert got == pytest.approx(expected, abs=1e-12)


def test_oracle_scorer_gives_zero_log_prob(grammar, demo_catalog, w0):
    scorer = OracleScorer(oracle_actions(w0))
    got = sequence_log_prob(w0, tokenize(W0_NL), scorer, grammar, demo_catalog,
                            check_normalization=False)
    assert got == 0.0


def test_normalization_error_detected(grammar, demo_catalog, w0):
    class Bad:
        def score(self, utt, state, legal, history):
            return np.full(len(legal), -1.0)

    with pytest.raises(ScorerNormalizationError):
        sequence_log_prob(w0, tokenize(W0_NL), Bad(), grammar, demo_catalog)


def test_baseline_scorer_normalizes_everywhere(grammar, demo_catalog):
    import random as _random

    fs = FeatureSpace(demo_catalog)
    scorer = BaselineScorer(random_model(fs, seed=5), demo_catalog)
    utt = tokenize(W0_NL)
    rng = _random.Random(0)
    from tapflow.genflow import random_walk

    for _ in range(10):
        state = init_state(grammar)
        history = ()
        target = random_walk(demo_catalog, rng, grammar)
        for a in target.actions:
            legal = legal_actions(state, demo_catalog)
            lps = scorer.score(utt, state, legal, history)
            assert abs(np.exp(lps).sum() - 1.0) <= 1e-9
            state = apply_action(state, a, demo_catalog, inplace=True)
            history = history + (a,)


def test_global_distribution_sums_to_one(grammar, fig_catalog):
    # the restricted catalog chain-terminates, so the reachable tree of legal
    # sequences is finite and per-step normalization telescopes to mass one
    fs = FeatureSpace(fig_catalog)
    utt = tokenize(W0_NL)
    for scorer in (UniformScorer(), BaselineScorer(random_model(fs, 7), fig_catalog)):
        total = 0.0
        flows = list(enumerate_workflows(fig_catalog, max_depth=3))
        assert len(flows) == 5
        for w in flows:
            total += math.exp(sequence_log_prob(w, utt, scorer, grammar, fig_catalog))
        assert total == pytest.approx(1.0, abs=1e-6)


# -- beam search -------------------------------------------------------------------


def test_oracle_beam_returns_gold_with_zero_score(grammar, demo_catalog, w0):
    scorer = OracleScorer(oracle_actions(w0))
    results = beam_search(tokenize(W0_NL), grammar, demo_catalog, scorer, beam_width=5)
    top, score = results[0]
    assert top == w0
    assert score == 0.0


def test_unbounded_beam_matches_bruteforce_ranking(grammar, fig_catalog):
    fs = FeatureSpace(fig_catalog)
    scorer = BaselineScorer(random_model(fs, seed=3), fig_catalog)
    utt = tokenize(W0_NL)
    results = beam_search(utt, grammar, fig_catalog, scorer, beam_width=None)
    brute = [
        (w, sequence_log_prob(w, utt, scorer, grammar, fig_catalog))
        for w in enumerate_workflows(fig_catalog, max_depth=3)
    ]
    brute.sort(key=lambda p: -p[1])
    assert len(results) == len(brute)
    for (wb, sb), (wr, sr) in zip(brute, results):
        assert sr == pytest.approx(sb, abs=1e-9)
        assert structurally_equal(wb.root, wr.root)


def test_beam_width_one_is_greedy(grammar, demo_catalog):
    fs = FeatureSpace(demo_catalog)
    scorer = BaselineScorer(random_model(fs, seed=11), demo_catalog)
    utt = tokenize(W0_NL)
    results = beam_search(utt, grammar, demo_catalog, scorer, beam_width=1)
    # greedy oracle: argmax at every step (ties by action text)
    state = init_state(grammar)
    history = ()
    while not is_complete(state):
        legal = legal_actions(state, demo_catalog)
        lps = scorer.score(utt, state, legal, history)
        ranked = sorted(zip(legal, lps), key=lambda p: (-p[1], p[0].text))
        a = ranked[0][0]
        state = apply_action(state, a, demo_catalog, inplace=True)
        history = history + (a,)
    assert structurally_equal(results[0][0].root, Wast.from_state(state).root)


def test_wider_beams_never_lose_score(grammar, demo_catalog):
    fs = FeatureSpace(demo_catalog)
    utt = tokenize(W0_NL)
    for seed in (0, 1, 2):
        scorer = BaselineScorer(random_model(fs, seed=seed), demo_catalog)
        prev = -np.inf
        for width in (1, 2, 5, 10):
            top = beam_search(utt, grammar, demo_catalog, scorer, beam_width=width)[0]
            assert top[1] >= prev - 1e-12
            prev = top[1]


def test_beam_outputs_validate(grammar, demo_catalog):
    from tapflow.engine import validate_wast

    fs = FeatureSpace(demo_catalog)
    scorer = BaselineScorer(random_model(fs, seed=2), demo_catalog)
    for w, _ in beam_search(tokenize(W0_NL), grammar, demo_catalog, scorer, 5):
        assert validate_wast(w, demo_catalog) == []


def test_no_complete_hypothesis_error(grammar, demo_catalog):
    with pytest.raises(NoCompleteHypothesisError):
        beam_search(
            tokenize(W0_NL), grammar, demo_catalog, UniformScorer(),
            beam_width=1, max_steps=3,
        )


# -- training -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_records(demo_catalog):
    return make_records(demo_catalog, 10, GenConfig(seed=23))


def test_zero_weights_reproduce_uniform(grammar, demo_catalog, w0):
    fs = FeatureSpace(demo_catalog)
    scorer = BaselineScorer(zero_model(fs), demo_catalog)
    utt = tokenize(W0_NL)
    state = init_state(grammar)
    history = ()
    for a in oracle_actions(w0):
        legal = legal_actions(state, demo_catalog)
        lps = scorer.score(utt, state, legal, history)
        assert np.allclose(lps, -np.log(len(legal)))
        state = apply_action(state, a, demo_catalog, inplace=True)
        history = history + (a,)


def test_training_loglik_monotone_with_small_lr(grammar, demo_catalog, small_records):
    config = TrainConfig(learning_rate=0.05, epochs=30, l2=0.0, seed=0)
    model = train_scorer(small_records, [], config, grammar, demo_catalog)
    diffs = np.diff(model.train_history)
    assert np.all(diffs >= -1e-8)


def test_training_improves_over_uniform(grammar, demo_catalog, small_records):
    config = TrainConfig(learning_rate=0.5, epochs=60, l2=1e-4, seed=0)
    model = train_scorer(small_records, small_records[:3], config, grammar, demo_catalog)
    assert model.train_history[-1] > model.train_history[0]
    assert len(model.dev_history) == 60


def test_gradient_matches_finite_differences(grammar, demo_catalog, small_records):
    fs = FeatureSpace(demo_catalog)
    enc = encode_examples(small_records[:4], fs, grammar, demo_catalog)
    rng = np.random.default_rng(99)
    h = 1e-5
    for _ in range(20):
        w = rng.normal(0, 0.5, fs.dim)
        _, grad = loglik_and_grad(w, enc, l2=1e-3)
        # probe a random subset of coordinates with central differences
        coords = rng.choice(fs.dim, size=12, replace=False)
        numeric = np.zeros_like(coords, dtype=float)
        for j, c in enumerate(coords):
            wp, wm = w.copy(), w.copy()
            wp[c] += h
            wm[c] -= h
            lp, _ = loglik_and_grad(wp, enc, l2=1e-3)
            lm, _ = loglik_and_grad(wm, enc, l2=1e-3)
            numeric[j] = (lp - lm) / (2 * h)
        analytic = grad[coords]
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
        assert np.linalg.norm(analytic - numeric) / denom <= 1e-4


def test_non_finite_loss_error(grammar, demo_catalog, small_records):
    # lr * l2 >> 1 makes the ridge term oscillate with exploding magnitude
    config = TrainConfig(learning_rate=1e300, epochs=25, l2=1e-4, seed=0)
    with np.errstate(all="ignore"), pytest.raises(NonFiniteLossError):
        train_scorer(small_records, [], config, grammar, demo_catalog)


def test_train_requires_examples(grammar, demo_catalog):
    with pytest.raises(TapflowError):
        train_scorer([], [], TrainConfig(), grammar, demo_catalog)


def test_model_save_load_roundtrip(tmp_path, demo_catalog):
    fs = FeatureSpace(demo_catalog)
    model = random_model(fs, seed=4)
    path = tmp_path / "model.json"
    model.save(path)
    loaded = BaselineScorerModel.load(path)
    assert loaded.feature_names == model.feature_names
    assert np.allclose(loaded.weights, model.weights)
    assert loaded.tokenizer == "v1"
    import json

    data = json.loads(path.read_text())
    assert sorted(data) == ["feature_names", "tokenizer", "version", "weights"]


# -- evaluation ------------------------------------------------------------------------


def test_evaluate_oracle_scores_perfectly(grammar, demo_catalog, small_records):
    bundle = ParserBundle(grammar, demo_catalog, oracle=True, allow_synthetic=True)
    metrics = evaluate(small_records, bundle)
    assert metrics.exact_match == 1.0
    assert metrics.action_accuracy == 1.0
    assert metrics.n == len(small_records)
    assert all(v == 1.0 for v in metrics.per_depth.values())


def test_evaluate_uniform_scorer_imperfect(grammar, demo_catalog):
    records = make_records(demo_catalog, 100, GenConfig(seed=77))
    bundle = ParserBundle(
        grammar, demo_catalog, scorer=UniformScorer(), allow_synthetic=True,
        beam_width=5,
    )
    metrics = evaluate(records, bundle)
    assert metrics.n == 100
    assert metrics.exact_match < 1.0


def test_evaluate_empty_set_is_an_error(grammar, demo_catalog):
    bundle = ParserBundle(grammar, demo_catalog, oracle=True, allow_synthetic=True)
    with pytest.raises(TapflowError, match="empty"):
        evaluate([], bundle)


def test_evaluate_requires_reviewed_unless_synthetic(grammar, demo_catalog, small_records):
    bundle = ParserBundle(grammar, demo_catalog, oracle=True)
    with pytest.raises(TapflowError, match="reviewed"):
        evaluate(small_records, bundle)
    from dataclasses import replace

    reviewed = [replace(e, status=Status.REVIEWED) for e in small_records]
    assert evaluate(reviewed, bundle).exact_match == 1.0

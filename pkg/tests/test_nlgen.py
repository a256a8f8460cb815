import json
import random

import pytest

from conftest import W0_NL
from tapflow.errors import MissingPhraseError, TapflowError
from tapflow.genflow import GenConfig, enumerate_workflows, generate_workflow
from tapflow.nlgen import (
    TemplateSet,
    action_units,
    fuse_descriptions,
    load_templates,
    tap_phrase,
)


def test_w0_draft_matches_frozen_string(demo_catalog, w0):
    assert fuse_descriptions(w0, demo_catalog) == W0_NL


def test_single_tap_frame(grammar, demo_catalog):
    w = generate_workflow(
        demo_catalog, GenConfig(seed=1, max_depth=1, p_extend=0.0, p_split=0.0), grammar
    )
    trig = demo_catalog.function(w.pattern.trigger_call.macro.qualified)
    act = demo_catalog.function(w.pattern.action_calls[0].macro.qualified)
    assert fuse_descriptions(w, demo_catalog) == f"If {trig.phrase}, then {act.phrase}."


def test_fuse_is_deterministic(demo_catalog, w0):
    assert fuse_descriptions(w0, demo_catalog) == fuse_descriptions(w0, demo_catalog)


def test_tap_phrase_lookup(demo_catalog):
    f = demo_catalog.function("Android.Any_Missed_Phone")
    assert tap_phrase(f, "trigger") == "any missed phone call occurs on Android"
    assert tap_phrase(f, "action") == "any missed phone call occurs on Android"


def test_tap_phrase_total_over_demo_catalog(demo_catalog):
    for f in demo_catalog.functions():
        assert tap_phrase(f, "action")


def test_missing_phrase_error():
    from tapflow.catalog import Capability, DataKind, MacroFunction

    f = MacroFunction("A", "X", Capability.ACTION, DataKind.TEXT, DataKind.NONE, "")
    with pytest.raises(MissingPhraseError, match="A.X"):
        tap_phrase(f)


def _expected_connective_counts(w, catalog):
    """Independent recount: split children default to "parallel"; the first
    action phrase steals one; the final override steals one more when the
    last phrase belongs to a split and there are >= 3 phrases."""
    order = []

    def walk(p):
        for call in p.action_calls:
            order.append(p.ctor)
            if call.next_pattern is not None:
                walk(call.next_pattern)

    walk(w.pattern)
    parallel = sum(1 for k in order if k == "Parallel_Split")
    if order and order[0] == "Parallel_Split":
        parallel -= 1
    if len(order) >= 3 and order[-1] == "Parallel_Split":
        parallel -= 1
    final = 1 if len(order) >= 3 else 0
    return parallel, final


def test_connective_counts_on_enumerated_workflows(grammar, fig_catalog, demo_catalog):
    for w in enumerate_workflows(fig_catalog, max_depth=2, max_branch=3):
        text = fuse_descriptions(w, demo_catalog)
        parallel, final = _expected_connective_counts(w, demo_catalog)
        assert text.count("and separately") == parallel
        assert text.count("and finally") == final


def test_every_phrase_appears_once_in_order(grammar, demo_catalog):
    for seed in range(30):
        w = generate_workflow(demo_catalog, GenConfig(seed=seed), grammar)
        text = fuse_descriptions(w, demo_catalog)
        phrases = []

        def walk(p):
            for call in p.action_calls:
                phrases.append(demo_catalog.function(call.macro.qualified).phrase)
                if call.next_pattern is not None:
                    walk(call.next_pattern)

        walk(w.pattern)
        pos = -1
        for phrase in phrases:
            assert text.count(phrase) >= 1
            nxt = text.index(phrase)
            assert nxt > pos
            pos = nxt


def test_no_unfilled_slots(grammar, demo_catalog):
    for seed in range(30):
        w = generate_workflow(demo_catalog, GenConfig(seed=seed), grammar)
        text = fuse_descriptions(w, demo_catalog)
        assert "{" not in text and "}" not in text


def test_template_overrides(tmp_path, demo_catalog, w0):
    override = {
        "sentence_frame": "When {trigger}: {actions}!",
        "connectives": {"first": "do", "parallel": "plus", "final": "finishing with"},
    }
    path = tmp_path / "templates.json"
    path.write_text(json.dumps(override))
    templates = load_templates(path)
    text = fuse_descriptions(w0, demo_catalog, templates)
    assert text.startswith("When any missed phone call occurs on Android: do ")
    assert "plus send the text" in text
    assert text.endswith("finishing with archive the text in a Google Drive spreadsheet!")


def test_template_validation():
    with pytest.raises(TapflowError):
        TemplateSet(trigger_frame="no slot here")
    with pytest.raises(TapflowError):
        TemplateSet(sentence_frame="only {trigger}")


def test_augmentation_is_seeded_and_off_by_default(demo_catalog, w0):
    base = fuse_descriptions(w0, demo_catalog)
    aug1 = fuse_descriptions(w0, demo_catalog, augment=True, rng=random.Random(3))
    aug2 = fuse_descriptions(w0, demo_catalog, augment=True, rng=random.Random(3))
    assert aug1 == aug2
    with pytest.raises(TapflowError):
        fuse_descriptions(w0, demo_catalog, augment=True)
    assert fuse_descriptions(w0, demo_catalog) == base


def test_action_units_keys(demo_catalog, w0):
    units = action_units(w0, demo_catalog)
    assert [k for k, _ in units] == ["first", "parallel", "final"]

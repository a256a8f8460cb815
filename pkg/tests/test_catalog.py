import json

import pytest

from tapflow.catalog import (
    Capability,
    Catalog,
    ChainMode,
    ChainRule,
    Channel,
    DataKind,
    MacroFunction,
    catalog_to_dict,
    load_catalog,
    save_catalog,
)
from tapflow.errors import CatalogError


def fn(catalog, qualified):
    return catalog.function(qualified)


def test_demo_catalog_contains_required_functions(demo_catalog):
    for name in [
        "Android.Any_Missed_Phone",
        "Watson_API.Voice_to_Text",
        "SMS.Send_Text_to_Me",
        "Google_Drive.Archive_Text_in_Spread_Sheet",
    ]:
        assert demo_catalog.has_function(name)
    assert len(demo_catalog.channels) >= 8


def test_demo_kinds_make_the_example_flow_valid(demo_catalog):
    amp = fn(demo_catalog, "Android.Any_Missed_Phone")
    vtt = fn(demo_catalog, "Watson_API.Voice_to_Text")
    stm = fn(demo_catalog, "SMS.Send_Text_to_Me")
    arch = fn(demo_catalog, "Google_Drive.Archive_Text_in_Spread_Sheet")
    assert amp.capability is Capability.TRIGGER and amp.output_kind is DataKind.AUDIO
    assert (vtt.input_kind, vtt.output_kind) == (DataKind.AUDIO, DataKind.TEXT)
    assert stm.output_kind is DataKind.NONE
    assert arch.input_kind is DataKind.TEXT
    assert demo_catalog.chainable(vtt, stm)
    assert demo_catalog.chainable(vtt, arch)


def test_no_return_value_functions_never_chain(demo_catalog):
    stm = fn(demo_catalog, "SMS.Send_Text_to_Me")
    for g in demo_catalog.functions():
        assert not demo_catalog.chainable(stm, g, ChainMode.STRICT)
        assert not demo_catalog.chainable(stm, g, ChainMode.KINDS)


def test_strict_mode_requires_explicit_rule(demo_catalog):
    # kind-compatible pair with no rule: file-producing trigger is not a
    # rule source, so build an artificial pair from catalog functions
    ext = fn(demo_catalog, "PDF_Tools.Extract_Text_from_File")
    slack = fn(demo_catalog, "Slack.Post_Text_to_Slack")
    assert ext.output_kind == slack.input_kind
    assert not demo_catalog.chainable(ext, slack, ChainMode.STRICT)
    assert demo_catalog.chainable(ext, slack, ChainMode.KINDS)


def test_kind_fallback_equals_bruteforce_pair_enumeration(demo_catalog):
    # oracle: exhaustive kind comparison over all pairs
    for f in demo_catalog.functions():
        for g in demo_catalog.functions():
            expected = (
                f.action_capable
                and g.action_capable
                and f.output_kind is not DataKind.NONE
                and f.output_kind == g.input_kind
            )
            assert demo_catalog.chainable(f, g, ChainMode.KINDS) == expected


def test_rules_are_subset_of_kind_relation(demo_catalog):
    for rule in demo_catalog.chain_rules:
        f = fn(demo_catalog, rule.from_function)
        g = fn(demo_catalog, rule.to_function)
        assert f.action_capable
        assert f.output_kind is not DataKind.NONE
        assert f.output_kind == g.input_kind


def test_save_load_roundtrip(tmp_path, demo_catalog):
    path = tmp_path / "catalog.json"
    save_catalog(demo_catalog, path)
    loaded = load_catalog(path)
    assert loaded.channels == demo_catalog.channels
    assert loaded.chain_rules == demo_catalog.chain_rules
    # canonical file re-saves byte-identically
    save_catalog(loaded, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_load_catalog_with_mode(tmp_path, demo_catalog):
    path = tmp_path / "catalog.json"
    save_catalog(demo_catalog, path)
    assert load_catalog(path, "kinds").chain_mode is ChainMode.KINDS


def test_dangling_rule_reference_rejected(tmp_path, demo_catalog):
    data = catalog_to_dict(demo_catalog)
    data["chain_rules"].append({"from": "Watson_API.Voice_to_Text", "to": "Foo.Bar"})
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(CatalogError, match="missing function"):
        load_catalog(path)


def test_rule_from_trigger_rejected():
    trig = MacroFunction(
        "A", "T", Capability.TRIGGER, DataKind.NONE, DataKind.TEXT, "t"
    )
    act = MacroFunction("A", "X", Capability.ACTION, DataKind.TEXT, DataKind.NONE, "x")
    with pytest.raises(CatalogError, match="not action-capable"):
        Catalog((Channel("A", "", (trig, act)),), (ChainRule("A.T", "A.X"),))


def test_kind_incompatible_rule_rejected():
    a = MacroFunction("A", "X", Capability.ACTION, DataKind.TEXT, DataKind.AUDIO, "x")
    b = MacroFunction("A", "Y", Capability.ACTION, DataKind.TEXT, DataKind.NONE, "y")
    with pytest.raises(CatalogError, match="kind-incompatible"):
        Catalog((Channel("A", "", (a, b)),), (ChainRule("A.X", "A.Y"),))


def test_trigger_with_input_kind_rejected():
    with pytest.raises(CatalogError, match="input_kind none"):
        MacroFunction("A", "T", Capability.TRIGGER, DataKind.TEXT, DataKind.TEXT, "t")


def test_malformed_file_rejected(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(CatalogError, match="does not parse"):
        load_catalog(path)
    path.write_text(json.dumps({"channels": [{"name": "A"}]}))
    with pytest.raises(CatalogError, match="malformed catalog"):
        load_catalog(path)


def test_restricted_subcatalog(fig_catalog):
    assert len(fig_catalog.functions()) == 4
    assert {ch.name for ch in fig_catalog.channels} == {
        "Android",
        "Watson_API",
        "SMS",
        "Google_Drive",
    }
    # rules outside the kept set are dropped
    for rule in fig_catalog.chain_rules:
        assert fig_catalog.has_function(rule.from_function)
        assert fig_catalog.has_function(rule.to_function)


def test_restricted_unknown_function(demo_catalog):
    with pytest.raises(CatalogError):
        demo_catalog.restricted(["Nope.Nothing"])


def test_figure_catalog_dead_ends_at_depth_two(fig_catalog):
    # every successor of every successor has no onward chain
    amp = fig_catalog.function("Android.Any_Missed_Phone")
    first = fig_catalog.trigger_targets(amp)
    assert [f.qualified for f in first] == ["Watson_API.Voice_to_Text"]
    for f in first:
        for g in fig_catalog.successors(f):
            assert fig_catalog.successors(g) == []

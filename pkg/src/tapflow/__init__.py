"""tapflow: build, serialize, generate, and semantically parse TAP-chain
workflow ASTs, plus the annotation loop that turns generated workflows into
(NL description, workflow) datasets."""

from .catalog import (
    Capability,
    Catalog,
    ChainMode,
    ChainRule,
    Channel,
    DataKind,
    MacroFunction,
    builtin_demo_catalog,
    figure_catalog,
    load_catalog,
    save_catalog,
)
from .engine import (
    Action,
    ActionKind,
    MacroRef,
    TransitionState,
    Wast,
    apply_action,
    init_state,
    is_complete,
    legal_actions,
    oracle_actions,
    replay,
    validate_wast,
)
from .errors import TapflowError
from .genflow import GenConfig, UsefulnessLabel, enumerate_workflows, generate_workflow
from .grammar import Cardinality, GrammarSpec, builtin_wpg
from .nlgen import TemplateSet, fuse_descriptions, tap_phrase
from .parsing import (
    BaselineScorer,
    BaselineScorerModel,
    OracleScorer,
    ParserBundle,
    TrainConfig,
    UniformScorer,
    beam_search,
    evaluate,
    sequence_log_prob,
    tokenize,
    train_scorer,
)
from .surface import (
    actions_to_text,
    parse_formal_expression,
    text_to_actions,
    to_formal_expression,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ActionKind",
    "BaselineScorer",
    "BaselineScorerModel",
    "Capability",
    "Cardinality",
    "Catalog",
    "ChainMode",
    "ChainRule",
    "Channel",
    "DataKind",
    "GenConfig",
    "GrammarSpec",
    "MacroFunction",
    "MacroRef",
    "OracleScorer",
    "ParserBundle",
    "TapflowError",
    "TemplateSet",
    "TrainConfig",
    "TransitionState",
    "UniformScorer",
    "UsefulnessLabel",
    "Wast",
    "actions_to_text",
    "apply_action",
    "beam_search",
    "builtin_demo_catalog",
    "builtin_wpg",
    "enumerate_workflows",
    "evaluate",
    "figure_catalog",
    "fuse_descriptions",
    "generate_workflow",
    "init_state",
    "is_complete",
    "legal_actions",
    "load_catalog",
    "oracle_actions",
    "parse_formal_expression",
    "replay",
    "save_catalog",
    "sequence_log_prob",
    "tap_phrase",
    "text_to_actions",
    "to_formal_expression",
    "tokenize",
    "train_scorer",
    "validate_wast",
]

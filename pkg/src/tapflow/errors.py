"""Exception types shared across the package."""


class TapflowError(Exception):
    """Base class for all package errors."""


class GrammarError(TapflowError):
    """Malformed grammar definition."""


class CompleteStateError(TapflowError):
    """Operation requires an open frontier but the state is complete."""


class IllegalActionError(TapflowError):
    """Action not in the legal set for the current frontier slot."""

    def __init__(self, slot_label: str, action: str):
        super().__init__(f"illegal action {action} at frontier slot {slot_label!r}")
        self.slot_label = slot_label
        self.action = action


class InvalidWastError(TapflowError):
    """Tree is not a structurally complete, well-formed workflow AST."""


class CatalogError(TapflowError):
    """Catalog file malformed, or references/capabilities inconsistent."""


class SurfaceError(TapflowError):
    """Base for formal-expression parsing errors."""


class LexicalError(SurfaceError):
    """Unexpected character or token in a formal expression."""


class ArityError(SurfaceError):
    """Pattern has the wrong number of arguments."""


class UnknownReferenceError(SurfaceError):
    """Channel or function name not present in the catalog."""


class DataFlowError(SurfaceError):
    """Parsed tree fails catalog data-flow validation."""

    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class ActionTextError(TapflowError):
    """Malformed canonical action line."""


class ExhaustedSearchError(TapflowError):
    """Random generation could not complete a workflow within its retry budget."""


class MissingPhraseError(TapflowError):
    """A function used in a workflow has no catalog phrase."""


class DatasetError(TapflowError):
    """Base for dataset file errors."""


class RecordFormatError(DatasetError):
    """Malformed dataset line."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateIdError(DatasetError):
    """Two records share an id."""


class ConsistencyError(DatasetError):
    """Record's action sequence does not replay to its formal expression."""


class EmptyUtteranceError(TapflowError):
    """Tokenizer got text with no tokens."""


class ScorerNormalizationError(TapflowError):
    """Scorer's legal-set probabilities do not sum to one."""


class NoCompleteHypothesisError(TapflowError):
    """Beam search exhausted max_steps without completing any hypothesis."""


class NonFiniteLossError(TapflowError):
    """Training objective became NaN or infinite."""


class ServiceLockError(TapflowError):
    """Another process holds the dataset lock."""

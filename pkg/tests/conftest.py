import pytest

from tapflow.catalog import builtin_demo_catalog, figure_catalog
from tapflow.engine import Wast, replay
from tapflow.grammar import builtin_wpg
from tapflow.surface import text_to_actions

# Canonical gold transition sequence of the running example workflow W0:
# a missed phone call is transcribed, and the text is both sent by SMS and
# archived in a spreadsheet.
W0_ACTION_LINES = [
    "ApplyConstr[Workflow]",
    "ApplyConstr[Sequence]",
    "ApplyConstr[Call]",
    "SelectMacr[Android]",
    "SelectMacr[Any_Missed_Phone]",
    "StopExpnsn",
    "ApplyConstr[Call]",
    "SelectMacr[Watson_API]",
    "SelectMacr[Voice_to_Text]",
    "ApplyConstr[Parallel_Split]",
    "StopExpnsn",
    "ApplyConstr[Call]",
    "SelectMacr[SMS]",
    "SelectMacr[Send_Text_to_Me]",
    "StopExpnsn",
    "ApplyConstr[Call]",
    "SelectMacr[Google_Drive]",
    "SelectMacr[Archive_Text_in_Spread_Sheet]",
    "StopExpnsn",
    "StopExpnsn",
]

W0_FORMAL = (
    "Sequence(Android.Any_Missed_Phone, "
    "Parallel_Split(Watson_API.Voice_to_Text, SMS.Send_Text_to_Me, "
    "Google_Drive.Archive_Text_in_Spread_Sheet))"
)

W0_NL = (
    "If any missed phone call occurs on Android, "
    "then convert the voice message to text with Watson API, "
    "and separately send the text to me by SMS, "
    "and finally archive the text in a Google Drive spreadsheet."
)


@pytest.fixture(scope="session")
def grammar():
    return builtin_wpg()


@pytest.fixture(scope="session")
def demo_catalog():
    return builtin_demo_catalog()


@pytest.fixture(scope="session")
def fig_catalog():
    """Four-function sub-catalog; its chain structure bottoms out at depth 2."""
    return figure_catalog()


@pytest.fixture()
def w0(grammar, demo_catalog) -> Wast:
    state = replay(text_to_actions(W0_ACTION_LINES), grammar, demo_catalog)
    return Wast.from_state(state)

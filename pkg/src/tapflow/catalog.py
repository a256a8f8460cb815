"""TAP vocabulary: channels, macro functions, data kinds, and chain rules.

Two chaining modes license how one TAP's action evokes the next pattern's
actions: ``strict`` consults the explicit chain-rule list only, ``kinds``
falls back to data-kind matching (the producer's output kind must equal the
consumer's input kind). Rule lists are validated to be a subset of the kind
relation, so strict is always at least as restrictive.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import CatalogError

CATALOG_VERSION = 1


class DataKind(enum.Enum):
    NONE = "none"
    EVENT = "event"
    AUDIO = "audio"
    TEXT = "text"
    FILE = "file"
    IMAGE = "image"
    URL = "url"


class Capability(enum.Enum):
    TRIGGER = "trigger"
    ACTION = "action"
    BOTH = "both"


class ChainMode(enum.Enum):
    STRICT = "strict"
    KINDS = "kinds"


@dataclass(frozen=True)
class MacroFunction:
    channel: str
    name: str
    capability: Capability
    input_kind: DataKind
    output_kind: DataKind
    phrase: str

    def __post_init__(self):
        if self.trigger_capable and self.input_kind is not DataKind.NONE:
            raise CatalogError(
                f"{self.qualified}: trigger-capable functions must have input_kind none"
            )

    @property
    def qualified(self) -> str:
        return f"{self.channel}.{self.name}"

    @property
    def trigger_capable(self) -> bool:
        return self.capability in (Capability.TRIGGER, Capability.BOTH)

    @property
    def action_capable(self) -> bool:
        return self.capability in (Capability.ACTION, Capability.BOTH)


@dataclass(frozen=True)
class Channel:
    name: str
    description: str
    functions: tuple[MacroFunction, ...]

    def __post_init__(self):
        names = [f.name for f in self.functions]
        if len(set(names)) != len(names):
            raise CatalogError(f"duplicate function names in channel {self.name}")


@dataclass(frozen=True)
class ChainRule:
    from_function: str
    to_function: str


@dataclass(frozen=True)
class Catalog:
    channels: tuple[Channel, ...]
    chain_rules: tuple[ChainRule, ...] = ()
    version: int = CATALOG_VERSION
    chain_mode: ChainMode = ChainMode.STRICT
    _functions: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _channels: dict = field(default_factory=dict, init=False, repr=False, compare=False)
    _rule_pairs: set = field(default_factory=set, init=False, repr=False, compare=False)

    def __post_init__(self):
        for ch in self.channels:
            if ch.name in self._channels:
                raise CatalogError(f"duplicate channel {ch.name}")
            self._channels[ch.name] = ch
            for f in ch.functions:
                if f.channel != ch.name:
                    raise CatalogError(f"{f.qualified} listed under channel {ch.name}")
                self._functions[f.qualified] = f
        for rule in self.chain_rules:
            src = self._functions.get(rule.from_function)
            dst = self._functions.get(rule.to_function)
            if src is None or dst is None:
                missing = rule.from_function if src is None else rule.to_function
                raise CatalogError(f"chain rule references missing function {missing}")
            if not src.action_capable:
                raise CatalogError(
                    f"chain rule source {src.qualified} is not action-capable"
                )
            if src.output_kind is DataKind.NONE or src.output_kind != dst.input_kind:
                raise CatalogError(
                    f"chain rule {src.qualified} -> {dst.qualified} is kind-incompatible"
                )
            self._rule_pairs.add((rule.from_function, rule.to_function))

    # -- lookups ---------------------------------------------------------

    def channel(self, name: str) -> Channel:
        try:
            return self._channels[name]
        except KeyError:
            raise CatalogError(f"unknown channel {name}") from None

    def has_channel(self, name: str) -> bool:
        return name in self._channels

    def function(self, qualified: str) -> MacroFunction:
        try:
            return self._functions[qualified]
        except KeyError:
            raise CatalogError(f"unknown function {qualified}") from None

    def has_function(self, qualified: str) -> bool:
        return qualified in self._functions

    def functions(self) -> list[MacroFunction]:
        return list(self._functions.values())

    def trigger_functions(self) -> list[MacroFunction]:
        return [f for f in self.functions() if f.trigger_capable]

    def action_functions(self) -> list[MacroFunction]:
        return [f for f in self.functions() if f.action_capable]

    # -- chaining --------------------------------------------------------

    def with_mode(self, mode: ChainMode | str) -> "Catalog":
        if isinstance(mode, str):
            mode = ChainMode(mode)
        return replace(self, chain_mode=mode)

    def chainable(self, f: MacroFunction, g: MacroFunction, mode: ChainMode | None = None) -> bool:
        """Whether action ``f`` may evoke ``g`` as the next pattern's action."""
        mode = mode or self.chain_mode
        if not f.action_capable or not g.action_capable:
            return False
        if (f.qualified, g.qualified) in self._rule_pairs:
            return True
        if mode is ChainMode.KINDS:
            return f.output_kind is not DataKind.NONE and f.output_kind == g.input_kind
        return False

    def successors(self, f: MacroFunction, mode: ChainMode | None = None) -> list[MacroFunction]:
        """Distinct functions ``f`` may chain into, in catalog order."""
        return [g for g in self.action_functions() if self.chainable(f, g, mode)]

    def feeds(self, trigger: MacroFunction, g: MacroFunction) -> bool:
        """Whether a trigger's payload can flow into action ``g`` within one TAP.

        Within-pattern edges are kind-licensed in both modes; chain rules only
        govern cross-TAP evocation.
        """
        return (
            g.action_capable
            and trigger.output_kind is not DataKind.NONE
            and trigger.output_kind == g.input_kind
        )

    def trigger_targets(self, trigger: MacroFunction) -> list[MacroFunction]:
        return [g for g in self.action_functions() if self.feeds(trigger, g)]

    def restricted(self, qualified_names: list[str]) -> "Catalog":
        """Sub-catalog containing only the named functions (and their channels)."""
        keep = set(qualified_names)
        missing = keep - set(self._functions)
        if missing:
            raise CatalogError(f"unknown functions: {sorted(missing)}")
        channels = []
        for ch in self.channels:
            fns = tuple(f for f in ch.functions if f.qualified in keep)
            if fns:
                channels.append(Channel(ch.name, ch.description, fns))
        rules = tuple(
            r
            for r in self.chain_rules
            if r.from_function in keep and r.to_function in keep
        )
        return Catalog(tuple(channels), rules, self.version, self.chain_mode)


# -- serialization -------------------------------------------------------


def catalog_to_dict(catalog: Catalog) -> dict:
    return {
        "version": catalog.version,
        "channels": [
            {
                "name": ch.name,
                "description": ch.description,
                "functions": [
                    {
                        "name": f.name,
                        "capability": f.capability.value,
                        "input_kind": f.input_kind.value,
                        "output_kind": f.output_kind.value,
                        "phrase": f.phrase,
                    }
                    for f in ch.functions
                ],
            }
            for ch in catalog.channels
        ],
        "chain_rules": [
            {"from": r.from_function, "to": r.to_function} for r in catalog.chain_rules
        ],
    }


def catalog_from_dict(data: dict) -> Catalog:
    try:
        channels = tuple(
            Channel(
                name=ch["name"],
                description=ch.get("description", ""),
                functions=tuple(
                    MacroFunction(
                        channel=ch["name"],
                        name=fn["name"],
                        capability=Capability(fn["capability"]),
                        input_kind=DataKind(fn["input_kind"]),
                        output_kind=DataKind(fn["output_kind"]),
                        phrase=fn.get("phrase", ""),
                    )
                    for fn in ch["functions"]
                ),
            )
            for ch in data["channels"]
        )
        rules = tuple(
            ChainRule(r["from"], r["to"]) for r in data.get("chain_rules", [])
        )
        version = int(data.get("version", CATALOG_VERSION))
    except (KeyError, TypeError, ValueError) as exc:
        raise CatalogError(f"malformed catalog: {exc}") from exc
    return Catalog(channels, rules, version)


def load_catalog(path: str | Path, mode: ChainMode | str | None = None) -> Catalog:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog file does not parse: {exc}") from exc
    catalog = catalog_from_dict(data)
    if mode is not None:
        catalog = catalog.with_mode(mode)
    return catalog


def save_catalog(catalog: Catalog, path: str | Path) -> None:
    text = json.dumps(catalog_to_dict(catalog), indent=2, ensure_ascii=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


# -- the built-in demo catalog --------------------------------------------


def _fn(channel, name, capability, input_kind, output_kind, phrase):
    return MacroFunction(
        channel,
        name,
        Capability(capability),
        DataKind(input_kind),
        DataKind(output_kind),
        phrase,
    )


def builtin_demo_catalog(mode: ChainMode | str = ChainMode.STRICT) -> Catalog:
    """Hand-authored demo vocabulary, ten channels.

    Kinds are chosen so that no function's output kind equals its input kind;
    this keeps the inlined surface form unambiguous under the catalog.
    """
    channels = (
        Channel(
            "Android",
            "Phone events on an Android device",
            (
                _fn("Android", "Any_Missed_Phone", "trigger", "none", "audio",
                    "any missed phone call occurs on Android"),
                _fn("Android", "New_Photo_Taken", "trigger", "none", "image",
                    "a new photo is taken on Android"),
            ),
        ),
        Channel(
            "Watson_API",
            "Cognitive media processing",
            (
                _fn("Watson_API", "Voice_to_Text", "action", "audio", "text",
                    "convert the voice message to text with Watson API"),
                _fn("Watson_API", "Describe_Image", "action", "image", "text",
                    "describe the photo with Watson API"),
            ),
        ),
        Channel(
            "SMS",
            "Text messaging",
            (
                _fn("SMS", "Send_Text_to_Me", "action", "text", "none",
                    "send the text to me by SMS"),
            ),
        ),
        Channel(
            "Google_Drive",
            "Cloud documents and storage",
            (
                _fn("Google_Drive", "Archive_Text_in_Spread_Sheet", "action", "text", "none",
                    "archive the text in a Google Drive spreadsheet"),
                _fn("Google_Drive", "Save_File_to_Drive", "action", "file", "none",
                    "save the file to Google Drive"),
            ),
        ),
        Channel(
            "Email",
            "Mailbox triggers and sending",
            (
                _fn("Email", "New_Attachment_Received", "trigger", "none", "file",
                    "an email with an attachment arrives in my mailbox"),
                _fn("Email", "Send_Text_as_Email", "action", "text", "none",
                    "email the text to my inbox"),
            ),
        ),
        Channel(
            "Dropbox",
            "File sync folder",
            (
                _fn("Dropbox", "New_File_in_Folder", "trigger", "none", "file",
                    "a new file appears in my Dropbox folder"),
                _fn("Dropbox", "Backup_File_to_Dropbox", "action", "file", "none",
                    "back up the file to Dropbox"),
            ),
        ),
        Channel(
            "Slack",
            "Team chat",
            (
                _fn("Slack", "Post_Text_to_Slack", "action", "text", "none",
                    "post the text to my Slack team"),
            ),
        ),
        Channel(
            "PDF_Tools",
            "Document conversion",
            (
                _fn("PDF_Tools", "Extract_Text_from_File", "action", "file", "text",
                    "extract the text from the file with PDF Tools"),
            ),
        ),
        Channel(
            "Imgur",
            "Image hosting",
            (
                _fn("Imgur", "Upload_Image_to_Imgur", "action", "image", "url",
                    "upload the photo to Imgur"),
                _fn("Imgur", "New_Image_Favorited", "trigger", "none", "image",
                    "I favorite an image on Imgur"),
            ),
        ),
        Channel(
            "Pocket",
            "Read-it-later list",
            (
                _fn("Pocket", "Save_Url_to_Pocket", "action", "url", "none",
                    "save the link to my Pocket list"),
                _fn("Pocket", "Add_Url_to_Bookmarks", "action", "url", "none",
                    "add the link to my browser bookmarks"),
            ),
        ),
    )
    rules = tuple(
        ChainRule(src, dst)
        for src, dst in [
            ("Watson_API.Voice_to_Text", "SMS.Send_Text_to_Me"),
            ("Watson_API.Voice_to_Text", "Google_Drive.Archive_Text_in_Spread_Sheet"),
            ("Watson_API.Voice_to_Text", "Email.Send_Text_as_Email"),
            ("Watson_API.Voice_to_Text", "Slack.Post_Text_to_Slack"),
            ("Watson_API.Describe_Image", "SMS.Send_Text_to_Me"),
            ("Watson_API.Describe_Image", "Slack.Post_Text_to_Slack"),
            ("Watson_API.Describe_Image", "Google_Drive.Archive_Text_in_Spread_Sheet"),
            ("PDF_Tools.Extract_Text_from_File", "SMS.Send_Text_to_Me"),
            ("PDF_Tools.Extract_Text_from_File", "Email.Send_Text_as_Email"),
            ("PDF_Tools.Extract_Text_from_File", "Google_Drive.Archive_Text_in_Spread_Sheet"),
            ("Imgur.Upload_Image_to_Imgur", "Pocket.Save_Url_to_Pocket"),
            ("Imgur.Upload_Image_to_Imgur", "Pocket.Add_Url_to_Bookmarks"),
        ]
    )
    return Catalog(channels, rules).with_mode(mode)


FIGURE_FUNCTIONS = [
    "Android.Any_Missed_Phone",
    "Watson_API.Voice_to_Text",
    "SMS.Send_Text_to_Me",
    "Google_Drive.Archive_Text_in_Spread_Sheet",
]


def figure_catalog(mode: ChainMode | str = ChainMode.STRICT) -> Catalog:
    """The four-function sub-catalog of the running example workflow."""
    return builtin_demo_catalog(mode).restricted(FIGURE_FUNCTIONS)

"""Prompt templates, numeric extraction and token estimates."""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from ..exceptions import ConfigurationError

_PRICE = re.compile(r"\$?\s*(\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|\.\d+)")
_TOKEN = re.compile(r"\w+|[^\w\s]")

#: Fixed per-message overhead of chat formatting, and the reply primer.
TOKENS_PER_MESSAGE = 3
TOKENS_PER_REPLY = 3


def placeholders(text: str) -> list:
    """Field names appearing in a ``str.format`` style template, in order."""
    names = []
    for _, name, _, _ in string.Formatter().parse(text):
        if name is not None and name not in names:
            names.append(name)
    return names


@dataclass
class PromptTemplate:
    """A system message plus a user prompt with ``{attribute}`` placeholders.

    Parameters
    ----------
    system_message : str
    user_template : str
        ``str.format`` syntax; literal braces are written ``{{`` and ``}}``.
    attribute_names : sequence of str, optional
        Defaults to the placeholders of ``user_template`` in order of first
        appearance.
    example : mapping, optional
        A representative attribute map used for :attr:`token_estimate`.
    """

    system_message: str
    user_template: str
    attribute_names: Sequence[str] = field(default_factory=list)
    example: Optional[Mapping[str, str]] = None

    def __post_init__(self):
        found = placeholders(self.user_template)
        if not self.attribute_names:
            self.attribute_names = found
        else:
            self.attribute_names = list(self.attribute_names)
            extra = set(found) - set(self.attribute_names)
            if extra:
                raise ConfigurationError(f"template uses undeclared placeholders {sorted(extra)}")

    @property
    def token_estimate(self) -> int:
        user = render_prompt(self, self.example) if self.example is not None else self.user_template
        return estimate_tokens(self.system_message, user)

    def to_dict(self):
        return {
            "system_message": self.system_message,
            "user_template": self.user_template,
            "attribute_names": list(self.attribute_names),
            "example": dict(self.example) if self.example is not None else None,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            system_message=data["system_message"],
            user_template=data["user_template"],
            attribute_names=data.get("attribute_names") or [],
            example=data.get("example"),
        )


def render_prompt(template: PromptTemplate, attributes: Mapping[str, str]) -> str:
    """Fill every placeholder of ``template.user_template``.

    Raises
    ------
    ConfigurationError
        When a placeholder has no value; the message names it.
    """
    attributes = dict(attributes or {})
    for name in placeholders(template.user_template):
        if name not in attributes:
            raise ConfigurationError(f"no value for placeholder {{{name}}}")
    return template.user_template.format(**attributes)


def extract_price(text: str) -> Optional[float]:
    """First number in ``text``, allowing a ``$`` sign and thousands separators.

    >>> extract_price("$1,299.99")
    1299.99
    >>> extract_price("no idea") is None
    True
    """
    if not text:
        return None
    match = _PRICE.search(text)
    if match is None:
        return None
    return float(match.group(1).replace(",", ""))


def estimate_tokens(system_message: str, user_message: str) -> int:
    """Approximate chat-format token count of a two-message request.

    Words and punctuation marks count one token each, every message adds a
    fixed formatting overhead and the reply primer adds a few more. This
    tracks BPE tokenizers closely on short English prompts without shipping
    a tokenizer.
    """
    words = len(_TOKEN.findall(system_message)) + len(_TOKEN.findall(user_message))
    return words + 2 * TOKENS_PER_MESSAGE + TOKENS_PER_REPLY


SURVEY_SYSTEM_MESSAGE = (
    "You are a customer. You are selected at random while shopping for laptops "
    "to participate in a survey."
)

_PHRASES = {
    "cpu": "{cpu} CPU",
    "ram": "{ram} RAM",
    "storage": "{storage} Storage Drive",
    "gpu": "{gpu} GPU",
    "resolution": "{resolution} display",
    "screen_size": "{screen_size} screen",
}


def laptop_template(attribute_names=("cpu", "ram", "storage"), brand="Lenovo") -> PromptTemplate:
    """Willingness-to-pay survey prompt over the given laptop attributes."""
    unknown = [a for a in attribute_names if a not in _PHRASES]
    if unknown:
        raise ConfigurationError(f"no phrase for attributes {unknown}")
    parts = [_PHRASES[a] for a in attribute_names]
    spec = parts[0] if len(parts) == 1 else ", ".join(parts[:-1]) + " and " + parts[-1]
    user = (
        "The customer is asked: What is the maximum price you would be willing to pay "
        f"for a {brand} laptop with {spec}? Please give a single price in numbers "
        "(no descriptions)."
    )
    example = {a: _EXAMPLE_VALUES[a] for a in attribute_names}
    return PromptTemplate(SURVEY_SYSTEM_MESSAGE, user, list(attribute_names), example)


_EXAMPLE_VALUES = {
    "cpu": "Intel Core i5",
    "ram": "16 GB",
    "storage": "256 GB",
    "gpu": "NVIDIA GeForce 20M",
    "resolution": "1080p Full HD",
    "screen_size": "13.3 inch",
}

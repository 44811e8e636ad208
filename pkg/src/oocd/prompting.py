"""Six-question rating prompt and the parser for the provider's list reply.

The prompt wording is load-bearing: downstream ratings were calibrated against
this exact text, so it is reproduced character for character (including its
typos and spacing). Do not "fix" it.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

from .errors import ComponentOutOfRange, EmptyCaption, MalformedVector

PROMPT_PREAMBLE = (
    "Given two sentences, I am going to ask you six questions. "
    "You should provide a final answer in a python list of length 6 "
    "where each component is a rate value (integer ranging from 0 to 9)."
)

PROMPT_QUESTIONS = (
    "The first question: Determine whether these two sentences are out of context. "
    "Rate your judgment by an integer number ranging from 0 to 9, "
    "where 9 refers to being completely out of context, and 0 refers to being completely in context.",
    "The second question: Determine whether the subject matters of these two sentences are the same. "
    "Rate your judgment by an integer number ranging from 0 to 9, "
    "where 9 indicates that the subject matters are completely different, "
    "and 0 indicates that the subject matters are completely the same",
    "The third question: Determine whether the broader context of these two sentences refer to are the same. "
    "Rate your judgment by an integer number ranging from 0 to 9, "
    "where 9 indicates that the broader context is completely different, "
    "and 0 indicates that the broader context is completely the same",
    "The fourth question: Determine whether these two sentences cohere together. "
    "Please rate your judgment by an integer number ranging from 0 to 9, "
    "where 9 indicates that the two sentences are not coherent at all, "
    "and 0 indicates that the two sentences are highly coherent",
    "The fifth question: Determine whether any information is missing that could help "
    "to explain the relationship between the two sentences. "
    "Please rate your judgment by an integer number ranging from 0 to 9, "
    "where 9 indicates that  important information is missing, "
    "and 0 indicates that there is no information missing.",
    "The sixth question: Determine the semantic similarity between the two sentences. "
    "Semantic similarity should be rated by an integer number ranges from 0 to 9, "
    "where 0 refers to semantically identical, and 9 refers to completely semantic different.",
)

# Captions drop into the literal bracket syntax with a comma-space separator
# and no quoting; any escaping would change the prompt that was calibrated.
PROMPT_CLOSING = (
    "The two sentences are [{caption1}, {caption2}]. "
    "You should output the python list only without explanations."
)


@dataclass(frozen=True)
class GptFeatureVector:
    """Six provider-rated integers: out-of-context degree, subject-matter
    difference, broader-context difference, incoherence, missing information,
    and semantic difference. Each lies in [0, 9]."""

    c1: int
    c2: int
    c3: int
    c4: int
    c5: int
    c6: int

    def __post_init__(self):
        for i, value in enumerate(self.as_tuple(), start=1):
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError(f"component {i} must be an integer, got {value!r}")
            if not (0 <= value <= 9):
                raise ComponentOutOfRange(i, value)

    def as_tuple(self) -> tuple[int, int, int, int, int, int]:
        return (self.c1, self.c2, self.c3, self.c4, self.c5, self.c6)

    @classmethod
    def from_iterable(cls, values) -> "GptFeatureVector":
        values = tuple(values)
        if len(values) != 6:
            raise MalformedVector(f"expected 6 components, got {len(values)}")
        return cls(*values)


IMPUTED_VECTOR = GptFeatureVector(5, 5, 5, 5, 5, 5)


def _strip_control_chars(text: str) -> str:
    # Newlines survive; every other control character is dropped.
    return "".join(ch for ch in text if ch == "\n" or unicodedata.category(ch) != "Cc")


def render_prompt(caption1: str, caption2: str) -> str:
    """Render the full rating prompt for a caption pair.

    Byte-identical across runs and platforms for identical captions.
    """
    if not caption1.strip():
        raise EmptyCaption("caption1 is empty")
    if not caption2.strip():
        raise EmptyCaption("caption2 is empty")
    closing = PROMPT_CLOSING.format(
        caption1=_strip_control_chars(caption1),
        caption2=_strip_control_chars(caption2),
    )
    return "\n".join([PROMPT_PREAMBLE, *PROMPT_QUESTIONS, closing])


_BRACKET_RUN = re.compile(r"\[([^][]*)\]")
_INT_TOKEN = re.compile(r"[+-]?\d+")


def _ints_from_body(body: str) -> list[int] | None:
    parts = body.split(",")
    if len(parts) != 6:
        return None
    values = []
    for part in parts:
        token = part.strip()
        if not _INT_TOKEN.fullmatch(token):
            return None
        values.append(int(token))
    return values


def parse_feature_vector(raw: str) -> GptFeatureVector:
    """Parse a provider reply into the six-integer vector.

    Strict pass first: the entire trimmed reply is a bracketed list of six
    integers. Failing that, a lenient pass takes the first bracketed
    comma-separated run of exactly six integers anywhere in the text.
    Components are then range-checked.
    """
    values = None

    trimmed = raw.strip()
    strict = _BRACKET_RUN.fullmatch(trimmed)
    if strict is not None:
        values = _ints_from_body(strict.group(1))

    if values is None:
        for match in _BRACKET_RUN.finditer(raw):
            values = _ints_from_body(match.group(1))
            if values is not None:
                break

    if values is None:
        raise MalformedVector("no bracketed list of exactly 6 integers found")

    for i, value in enumerate(values, start=1):
        if not (0 <= value <= 9):
            raise ComponentOutOfRange(i, value)
    return GptFeatureVector(*values)


def format_vector(values) -> str:
    """Render six integers the way a well-behaved reply looks: ``[a, b, c, d, e, f]``."""
    return "[" + ", ".join(str(v) for v in values) + "]"

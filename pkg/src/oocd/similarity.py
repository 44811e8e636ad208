"""Caption-pair semantic similarity: sidecar client, precomputed replay, and a
native lexical fallback.

Every vector records its source; one training run must not silently mix
sources (see ``oocd.features.ensure_single_source``).
"""

from __future__ import annotations

import json
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass

from .audit import AuditLog
from .errors import EmptyCaption, MalformedRecord, SidecarProtocolError, SidecarUnreachable

SOURCE_SIDECAR = "sidecar"
SOURCE_PRECOMPUTED = "precomputed"
SOURCE_LEXICAL = "lexical"
SOURCES = (SOURCE_SIDECAR, SOURCE_PRECOMPUTED, SOURCE_LEXICAL)


@dataclass(frozen=True)
class SimilarityVector:
    s_base: float
    s_large: float
    source: str

    def __post_init__(self):
        for name, value in (("s_base", self.s_base), ("s_large", self.s_large)):
            if not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.source not in SOURCES:
            raise ValueError(f"unknown similarity source {self.source!r}")


def _default_transport(url: str, payload: dict, timeout: float):
    import requests

    try:
        resp = requests.post(url, json=payload, timeout=timeout)
    except requests.RequestException as exc:
        raise SidecarUnreachable(str(exc)) from exc
    return resp.status_code, resp.text


def fetch_similarity(
    caption1: str,
    caption2: str,
    endpoint: str,
    *,
    transport=_default_transport,
    timeout: float = 10.0,
    audit: AuditLog | None = None,
    record_id: str | None = None,
) -> SimilarityVector:
    """POST the pair to the sidecar's /similarity endpoint; clamp into [0, 1]."""
    url = endpoint.rstrip("/") + "/similarity"
    status, body = transport(url, {"caption1": caption1, "caption2": caption2}, timeout)
    if status != 200:
        raise SidecarProtocolError(f"sidecar returned status {status}: {body[:200]!r}")
    try:
        obj = json.loads(body)
        s_base, s_large = float(obj["s_base"]), float(obj["s_large"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise SidecarProtocolError(f"bad sidecar payload: {body[:200]!r}") from exc

    clamped = {}
    for name, value in (("s_base", s_base), ("s_large", s_large)):
        bounded = min(1.0, max(0.0, value))
        if bounded != value:
            if audit is not None:
                audit.emit("clamp", record_id=record_id, field=name, raw=value, clamped=bounded)
        clamped[name] = bounded
    return SimilarityVector(clamped["s_base"], clamped["s_large"], SOURCE_SIDECAR)


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> list[str]:
    """Unicode-whitespace split, lowercase, leading/trailing punctuation stripped."""
    tokens = []
    for word in text.lower().split():
        word = _strip_punct(word)
        if word:
            tokens.append(word)
    return tokens


def lexical_similarity_fallback(caption1: str, caption2: str) -> SimilarityVector:
    """Token-set Jaccard and term-frequency cosine over the same tokens.

    Deterministic stand-in used when neither the sidecar nor precomputed
    scores are available; never silently mixed with model scores.
    """
    if not caption1.strip():
        raise EmptyCaption("caption1 is empty")
    if not caption2.strip():
        raise EmptyCaption("caption2 is empty")

    tokens1, tokens2 = tokenize(caption1), tokenize(caption2)
    set1, set2 = set(tokens1), set(tokens2)

    if not set1 and not set2:
        return SimilarityVector(1.0, 1.0, SOURCE_LEXICAL)
    if not set1 or not set2:
        return SimilarityVector(0.0, 0.0, SOURCE_LEXICAL)

    jaccard = len(set1 & set2) / len(set1 | set2)

    tf1, tf2 = Counter(tokens1), Counter(tokens2)
    if tf1 == tf2:
        # exact self-similarity; sqrt rounding would otherwise leave ~1-ulp dust
        cosine = 1.0
    else:
        dot = sum(tf1[t] * tf2[t] for t in tf1.keys() & tf2.keys())
        norm1 = math.sqrt(sum(v * v for v in tf1.values()))
        norm2 = math.sqrt(sum(v * v for v in tf2.values()))
        cosine = min(1.0, dot / (norm1 * norm2))

    return SimilarityVector(jaccard, cosine, SOURCE_LEXICAL)


class PrecomputedSimilarityStore:
    """Replay archived similarity scores: JSONL of {id, s_base, s_large}."""

    def __init__(self, scores: dict[str, tuple[float, float]], source_path: str = "<memory>"):
        self._scores = dict(scores)
        self.source_path = source_path

    @classmethod
    def load(cls, path: str) -> "PrecomputedSimilarityStore":
        scores: dict[str, tuple[float, float]] = {}
        with open(path, encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedRecord(line_number, f"invalid record syntax: {exc.msg}") from exc
                try:
                    rec_id = obj["id"]
                    s_base, s_large = float(obj["s_base"]), float(obj["s_large"])
                except (KeyError, TypeError, ValueError):
                    raise MalformedRecord(line_number, "expected fields id, s_base, s_large")
                if rec_id in scores:
                    raise MalformedRecord(line_number, f"duplicate id {rec_id!r}")
                for name, value in (("s_base", s_base), ("s_large", s_large)):
                    if not (0.0 <= value <= 1.0):
                        raise MalformedRecord(line_number, f"{name} {value} outside [0, 1]")
                scores[rec_id] = (s_base, s_large)
        return cls(scores, source_path=str(path))

    def get(self, record_id: str) -> SimilarityVector | None:
        pair = self._scores.get(record_id)
        if pair is None:
            return None
        return SimilarityVector(pair[0], pair[1], SOURCE_PRECOMPUTED)

    def __len__(self) -> int:
        return len(self._scores)

"""Content-addressed, append-only store for raw provider responses.

The key hashes (model_id, temperature, prompt) only — not the endpoint — so
mirrored endpoints share a cache. Entries are never overwritten: recorded
responses are the replication artifact once a pinned model snapshot is gone.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, asdict
from pathlib import Path

PARSE_OK = "ok"
PARSE_MALFORMED = "malformed"


def cache_key(model_id: str, temperature: float, prompt: str) -> str:
    payload = json.dumps(
        {"model_id": model_id, "temperature": float(temperature), "prompt": prompt},
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheEntry:
    key: str
    model_id: str
    temperature: float
    prompt: str
    raw_response: str
    parse_status: str  # PARSE_OK or PARSE_MALFORMED
    parsed: tuple[int, ...] | None
    created_at: float


class ResponseCache:
    """One JSON file per entry, named by the content hash, written atomically."""

    def __init__(self, directory: str | Path):
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self._dir / f"{key}.json"

    def get(self, key: str) -> CacheEntry | None:
        path = self._path(key)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        parsed = obj.get("parsed")
        return CacheEntry(
            key=obj["key"],
            model_id=obj["model_id"],
            temperature=obj["temperature"],
            prompt=obj["prompt"],
            raw_response=obj["raw_response"],
            parse_status=obj["parse_status"],
            parsed=None if parsed is None else tuple(parsed),
            created_at=obj["created_at"],
        )

    def put(self, entry: CacheEntry) -> tuple[CacheEntry, bool]:
        """Store an entry unless its key already exists.

        Returns ``(stored_entry, created)``. When the key is already present
        the existing entry wins and is returned unchanged — the first recorded
        response is the one replayed forever after.
        """
        existing = self.get(entry.key)
        if existing is not None:
            return existing, False
        path = self._path(entry.key)
        obj = asdict(entry)
        obj["parsed"] = None if entry.parsed is None else list(entry.parsed)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, ensure_ascii=False, sort_keys=True, indent=2)
        os.replace(tmp, path)
        return entry, True

    def make_entry(
        self,
        model_id: str,
        temperature: float,
        prompt: str,
        raw_response: str,
        parsed: tuple[int, ...] | None,
    ) -> CacheEntry:
        return CacheEntry(
            key=cache_key(model_id, temperature, prompt),
            model_id=model_id,
            temperature=temperature,
            prompt=prompt,
            raw_response=raw_response,
            parse_status=PARSE_OK if parsed is not None else PARSE_MALFORMED,
            parsed=parsed,
            created_at=time.time(),
        )

    def keys(self) -> list[str]:
        return sorted(p.stem for p in self._dir.glob("*.json"))

    def __len__(self) -> int:
        return len(self.keys())

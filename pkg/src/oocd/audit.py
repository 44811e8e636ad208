"""Line-delimited audit log: every nondeterminism source must be inspectable.

Events of interest: provider calls, cache hits, imputations, score clamps,
gate decisions. The in-memory event list drives tests; the optional file sink
adds a wall-clock timestamp per line (reports never include it).
"""

from __future__ import annotations

import json
import threading
import time


class AuditLog:
    def __init__(self, path: str | None = None):
        self.events: list[dict] = []
        self._lock = threading.Lock()
        self._fh = open(path, "a", encoding="utf-8") if path else None

    def emit(self, event: str, **fields) -> None:
        record = {"event": event, **fields}
        with self._lock:
            self.events.append(record)
            if self._fh is not None:
                line = dict(record)
                line["ts"] = time.time()
                self._fh.write(json.dumps(line, ensure_ascii=False, sort_keys=True) + "\n")
                self._fh.flush()

    def count(self, event: str, **match) -> int:
        return sum(
            1
            for rec in self.events
            if rec["event"] == event and all(rec.get(k) == v for k, v in match.items())
        )

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

"""Append-only simulation event log: one canonical JSON record per line.

The same run always produces byte-identical lines, which is the determinism
contract the acceptance suite checks. A log can collect in memory, stream to
a file sink, or both.
"""

from __future__ import annotations

import json
from typing import IO, Iterable, List, Optional

from .canon import canonical_json


class EventLog:
    def __init__(self, sink: Optional[IO[str]] = None, keep_lines: bool = True):
        self.lines: List[str] = []
        self._sink = sink
        self._keep = keep_lines

    def append(self, at: int, kind: str, payload: dict) -> None:
        line = canonical_json({"at": at, "kind": kind, "payload": payload})
        if self._keep:
            self.lines.append(line)
        if self._sink is not None:
            self._sink.write(line + "\n")

    def dump(self) -> str:
        return "\n".join(self.lines) + ("\n" if self.lines else "")


def parse_lines(lines: Iterable[str]) -> Iterable[dict]:
    for raw in lines:
        raw = raw.strip()
        if raw:
            yield json.loads(raw)


def read_log_file(path) -> List[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return list(parse_lines(fh))

"""Session transcript: an ordered event log with JSON-lines serialization.

Layout, one JSON object per line, keys in a fixed order::

    {"ev":"header","format":"qsdc-transcript/1","config":{...}}
    {"ev":"prep","pos":0,"basis":"+","bit":1,"u":[0.71]}
    ...
    {"ev":"end","events":K}

``u`` lists the uniform variates consumed since the previous event, in the
order they were drawn; concatenating them over the file reproduces the
session's random stream. ``events`` in the trailer counts the lines before it.

Event kinds, in protocol order:

    prep      pos, basis, bit             Bob's preparation record
    eve       leg, pos, action, [basis, bit, label, guess]   (harness only)
    fwd/bwd   pos, delivered              channel outcome per leg
    sample1   positions                   Alice's phase-1 check subset
    check     pos, basis, result          announced check measurement
    announce1 count, lost                 announcement summary, lost positions
    estimate1 error_rate, compared, mismatches, discarded
    partition a, s, b                     B = A - S (b as a position list)
    decide1   decision, reason
    sample2   positions                   phase-2 check positions
    encode    pos, op                     Alice's encoding
    receipt   returned, lost
    decode    pos, bit                    bit is null for an erasure
    announce2 entries                     [pos, coded bit] pairs
    verify2   error_rate, compared, mismatches, decision, reason
    message   bits                        decoded message, '-' for erasures
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Optional

FORMAT = "qsdc-transcript/1"


class TranscriptParseError(ValueError):
    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class Transcript:
    def __init__(self, rng=None) -> None:
        self.events: list[dict] = []
        self._rng = rng

    def emit(self, ev: str, **fields) -> dict:
        event = {"ev": ev, **fields}
        if self._rng is not None:
            u = self._rng.drain()
            if u:
                event["u"] = u
        self.events.append(event)
        return event

    def of_kind(self, ev: str) -> list[dict]:
        return [e for e in self.events if e["ev"] == ev]

    def lines(self) -> list[str]:
        out = [_dumps(e) for e in self.events]
        out.append(_dumps({"ev": "end", "events": len(self.events)}))
        return out

    def serialize(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def write(self, path: Path) -> None:
        Path(path).write_text(self.serialize(), encoding="utf-8")

    def variates(self) -> list[float]:
        return [u for e in self.events for u in e.get("u", ())]

    def ordering_violations(self) -> int:
        return ordering_violations(self.events)


def _dumps(event: dict) -> str:
    return json.dumps(event, separators=(",", ":"), allow_nan=False)


def ordering_violations(events: Iterable[dict]) -> int:
    """Count encode events that precede a phase-1 continue decision."""
    cleared = False
    bad = 0
    for e in events:
        if e["ev"] == "decide1" and e.get("decision") == "continue":
            cleared = True
        elif e["ev"] == "encode" and not cleared:
            bad += 1
    return bad


def parse(text: str) -> Transcript:
    """Parse serialized text; the trailer is checked and dropped."""
    t = Transcript()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    end: Optional[dict] = None
    for lineno, line in enumerate(lines, start=1):
        if end is not None:
            raise TranscriptParseError(lineno, "content after end record")
        try:
            event = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TranscriptParseError(lineno, f"invalid JSON ({exc.msg})") from None
        if not isinstance(event, dict) or "ev" not in event:
            raise TranscriptParseError(lineno, "record without 'ev' field")
        if lineno == 1 and (event["ev"] != "header" or event.get("format") != FORMAT):
            raise TranscriptParseError(lineno, f"expected a {FORMAT} header")
        if event["ev"] == "end":
            if event.get("events") != lineno - 1:
                raise TranscriptParseError(lineno, "end record count does not match")
            end = event
        else:
            t.events.append(event)
    if end is None:
        raise TranscriptParseError(len(lines) + 1, "missing end record (truncated file?)")
    return t


def read(path: Path) -> Transcript:
    return parse(Path(path).read_text(encoding="utf-8"))

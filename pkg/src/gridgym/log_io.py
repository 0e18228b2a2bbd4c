"""Episode logs (JSON lines) and the canonical JSON form used everywhere.

Canonical form: sorted keys, no whitespace, shortest round-trip decimals
for floats, NaN/Infinity forbidden. Identical in-memory records therefore
serialize to identical bytes, which is what makes `replay --verify` and
the protocol round-trip bit-exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError


def _plain(value):
    """Coerce numpy scalars and tuples into plain JSON-friendly types."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        return value
    if hasattr(value, "item"):  # numpy scalar
        return _plain(value.item())
    raise TypeError(f"cannot canonicalize {type(value).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


def config_hash(config_doc: dict, case_text: str, chronics_texts: list[str]) -> str:
    """Hash binding a log to its exact case, chronics, and thresholds."""
    h = hashlib.sha256()
    h.update(canonical_json(config_doc).encode())
    h.update(sha256_hex(case_text).encode())
    for text in chronics_texts:
        h.update(sha256_hex(text).encode())
    return h.hexdigest()[:16]


@dataclass
class EpisodeLog:
    """In-memory form of one episode log: header, step records, footer."""

    header: dict
    steps: list[dict]
    end: dict | None = None

    @property
    def score(self) -> float:
        return self.end["score"] if self.end else 0.0

    @property
    def termination(self) -> str:
        return self.end["termination"] if self.end else "incomplete"

    def lines(self) -> list[str]:
        out = [canonical_json(self.header)]
        out.extend(canonical_json(rec) for rec in self.steps)
        if self.end is not None:
            out.append(canonical_json(self.end))
        return out

    def dumps(self) -> str:
        return "\n".join(self.lines()) + "\n"


def write_log(log: EpisodeLog, path: str | Path) -> None:
    Path(path).write_text(log.dumps())


def read_log(path: str | Path) -> EpisodeLog:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    records = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {n}: not valid JSON: {exc}") from exc
    if not records or records[0].get("type") != "header":
        raise ParseError(f"{path}: first record must be a header")
    header = records[0]
    steps = [r for r in records[1:] if r.get("type") == "step"]
    ends = [r for r in records[1:] if r.get("type") == "end"]
    if len(records) - 1 != len(steps) + len(ends) or len(ends) > 1:
        raise ParseError(f"{path}: unexpected record types")
    return EpisodeLog(header=header, steps=steps, end=ends[0] if ends else None)

"""Line-delimited record I/O with an optional leading metadata line.

Artifacts written by this toolkit start with {"_meta": {...}} carrying tool
version, config hash, template version and seed; readers skip it. Writing is
canonical (sorted keys, fixed separators) so identical inputs produce byte
identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ValidationError

META_KEY = "_meta"


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def write_records(
    path: str | Path, records: Iterable[dict], meta: dict[str, Any] | None = None
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        if meta is not None:
            handle.write(dumps_canonical({META_KEY: meta}) + "\n")
        for record in records:
            handle.write(dumps_canonical(record) + "\n")


def iter_records(path: str | Path) -> Iterator[dict]:
    path = Path(path)
    try:
        handle = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    with handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{line_no}: not valid JSON: {exc}") from exc
            if not isinstance(data, dict):
                raise ValidationError(f"{path}:{line_no}: expected an object per line")
            if line_no == 1 and META_KEY in data:
                continue
            yield data


def read_records(path: str | Path) -> list[dict]:
    return list(iter_records(path))


def read_meta(path: str | Path) -> dict[str, Any] | None:
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        first = handle.readline().strip()
    if not first:
        return None
    data = json.loads(first)
    if isinstance(data, dict) and META_KEY in data:
        return data[META_KEY]
    return None

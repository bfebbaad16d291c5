"""CSV/JSON writing shared by every artifact type."""
from __future__ import annotations

import io
from typing import Iterable, Sequence


def fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(x) for x in row) + "\n")
    return buf.getvalue()


def write_text(path, text: str) -> None:
    # newline="" keeps "\n" on every platform
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)

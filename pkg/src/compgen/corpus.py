"""Dataset records and JSONL I/O shared by the pipeline stages."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from compgen.mr_tree import MrParseError, MrTree, debracket, parse_mr, serialize
from compgen.template_engine import TemplateRegistry, render

__all__ = [
    "Example",
    "CorpusError",
    "read_jsonl",
    "iter_jsonl",
    "write_jsonl",
    "write_json",
    "atomic_write_text",
    "read_corpus",
    "file_digest",
]


class CorpusError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Example:
    id: str
    query: str
    mr: MrTree
    reference: str
    template_text: str = ""
    schema_tag: str | None = None

    @property
    def plain_reference(self) -> str:
        return debracket(self.reference)

    def with_template_text(self, registry: TemplateRegistry) -> Example:
        return Example(self.id, self.query, self.mr, self.reference, render(self.mr, registry), self.schema_tag)

    def to_dict(self) -> dict:
        d = {
            "id": self.id,
            "query": self.query,
            "mr": serialize(self.mr),
            "reference": self.reference,
            "schema_tag": self.schema_tag,
        }
        if self.template_text:
            d["template_text"] = self.template_text
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Example:
        for key in ("id", "mr", "reference"):
            if key not in d:
                raise KeyError(key)
        return cls(
            id=str(d["id"]),
            query=d.get("query", ""),
            mr=parse_mr(d["mr"]),
            reference=d["reference"],
            template_text=d.get("template_text") or "",
            schema_tag=d.get("schema_tag"),
        )


def iter_jsonl(path: str | os.PathLike) -> Iterator[tuple[int, dict | Exception]]:
    """Yield ``(line_number, obj)``; malformed lines yield the exception instead."""
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("expected a JSON object")
            except ValueError as e:
                yield lineno, e
            else:
                yield lineno, obj


def read_jsonl(path: str | os.PathLike) -> list[dict]:
    out = []
    for lineno, obj in iter_jsonl(path):
        if isinstance(obj, Exception):
            raise CorpusError(str(obj), lineno)
        out.append(obj)
    return out


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path: str | os.PathLike, rows: Iterable[dict]) -> None:
    atomic_write_text(path, "".join(_dumps(r) + "\n" for r in rows))


def write_json(path: str | os.PathLike, obj) -> None:
    atomic_write_text(path, json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n")


def read_corpus(path: str | os.PathLike, registry: TemplateRegistry | None = None) -> list[Example]:
    """Load a corpus file, rendering ``template_text`` with ``registry`` when absent."""
    examples = []
    seen = set()
    for lineno, obj in iter_jsonl(path):
        if isinstance(obj, Exception):
            raise CorpusError(str(obj), lineno)
        try:
            ex = Example.from_dict(obj)
        except (KeyError, MrParseError) as e:
            raise CorpusError(f"bad record: {e}", lineno) from e
        if ex.id in seen:
            raise CorpusError(f"duplicate id {ex.id!r}", lineno)
        seen.add(ex.id)
        if registry is not None and not ex.template_text:
            ex = ex.with_template_text(registry)
        examples.append(ex)
    return examples


def file_digest(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()

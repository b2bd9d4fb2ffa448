"""Linearized tree-structured meaning representations.

A linearized MR is a whitespace-tokenized string in which ``[LABEL`` opens a
node and ``]`` closes the innermost open node; every other token is a
terminal.  Labels prefixed ``DS_`` are discourse relations, ``DG_`` dialog
acts, everything else an argument::

    [DS_JUSTIFY [DG_RECOMMEND [ATTIRE_NOT jacket ] ] [DG_INFORM [CONDITION cold ] ] ]

The same grammar covers structurally annotated responses, where free text may
sit between the bracketed spans.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

__all__ = [
    "NodeKind",
    "MrNode",
    "MrTree",
    "StructureSignature",
    "Violation",
    "MrParseError",
    "EmptyInput",
    "UnbalancedBrackets",
    "BadLabel",
    "StrayBracket",
    "parse_mr",
    "serialize",
    "extract_signature",
    "validate",
    "node_kind",
    "debracket",
    "iter_nodes",
]

LABEL_RE = re.compile(r"[A-Z][A-Z0-9_]*\Z")
_TOKEN_RE = re.compile(r"\S+")
_MARKER_RE = re.compile(r"(?<!\S)(?:\[[^\s\[\]]*|\])(?!\S)")
_SPACE_BEFORE_PUNCT_RE = re.compile(r"\s+([,.;:!?])")


class NodeKind(enum.Enum):
    DISCOURSE_RELATION = "DiscourseRelation"
    DIALOG_ACT = "DialogAct"
    ARGUMENT = "Argument"


def node_kind(label: str) -> NodeKind:
    if label.startswith("DS_"):
        return NodeKind.DISCOURSE_RELATION
    if label.startswith("DG_"):
        return NodeKind.DIALOG_ACT
    return NodeKind.ARGUMENT


Item = Union[str, "MrNode"]


@dataclass(frozen=True)
class MrNode:
    """One bracketed node.

    ``items`` keeps terminal tokens and child nodes interleaved in their
    original order; ``children`` and ``terminals`` are filtered views of it.
    """

    label: str
    items: tuple[Item, ...] = ()

    @property
    def kind(self) -> NodeKind:
        return node_kind(self.label)

    @property
    def children(self) -> tuple[MrNode, ...]:
        return tuple(it for it in self.items if isinstance(it, MrNode))

    @property
    def terminals(self) -> tuple[str, ...]:
        return tuple(it for it in self.items if isinstance(it, str))

    @property
    def text(self) -> str:
        """Own terminal tokens joined by single spaces."""
        return " ".join(self.terminals)

    def flat_text(self) -> str:
        """All terminal tokens of this subtree, in order."""
        return " ".join(_iter_terminals(self.items))

    def child(self, label: str) -> MrNode | None:
        for c in self.children:
            if c.label == label:
                return c
        return None


@dataclass(frozen=True)
class MrTree:
    """An ordered forest of top-level items plus the text it was parsed from.

    Top-level terminals are allowed so that loosely formatted annotated
    responses still parse; ``source_text`` does not take part in equality.
    """

    items: tuple[Item, ...]
    source_text: str = field(default="", compare=False)

    @property
    def nodes(self) -> tuple[MrNode, ...]:
        return tuple(it for it in self.items if isinstance(it, MrNode))

    @property
    def root(self) -> MrNode | None:
        nodes = self.nodes
        return nodes[0] if len(nodes) == 1 else None

    def __str__(self) -> str:
        return serialize(self)


class StructureSignature(str):
    """Canonical label skeleton of an MR; terminals are erased."""

    __slots__ = ()

    def labels(self) -> list[str]:
        return [tok[1:] for tok in self.split() if tok.startswith("[")]


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str
    message: str

    def to_dict(self) -> dict:
        return {"path": self.path, "rule": self.rule, "message": self.message}


class MrParseError(ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class EmptyInput(MrParseError):
    def __init__(self):
        super().__init__("empty MR string")


class UnbalancedBrackets(MrParseError):
    pass


class BadLabel(MrParseError):
    pass


class StrayBracket(MrParseError):
    """A terminal token contains ``[`` or ``]``."""


def parse_mr(text: str) -> MrTree:
    if not text or not text.strip():
        raise EmptyInput()
    # stack of (label, items, open offset); index 0 is the top-level forest
    stack: list[tuple[str | None, list[Item], int]] = [(None, [], 0)]
    for m in _TOKEN_RE.finditer(text):
        tok, pos = m.group(), m.start()
        if tok == "]":
            if len(stack) == 1:
                raise UnbalancedBrackets("unexpected ']'", pos)
            label, items, _ = stack.pop()
            stack[-1][1].append(MrNode(label, tuple(items)))
        elif tok.startswith("["):
            label = tok[1:]
            if not LABEL_RE.match(label):
                raise BadLabel(f"invalid label {label!r}", pos)
            stack.append((label, [], pos))
        elif "[" in tok or "]" in tok:
            raise StrayBracket(f"bracket inside token {tok!r}", pos)
        else:
            stack[-1][1].append(tok)
    if len(stack) > 1:
        label, _, pos = stack[-1]
        raise UnbalancedBrackets(f"unclosed node {label!r}", pos)
    return MrTree(tuple(stack[0][1]), source_text=text)


def _serialize_items(items: Sequence[Item], out: list[str], terminals: bool) -> None:
    for it in items:
        if isinstance(it, MrNode):
            out.append("[" + it.label)
            _serialize_items(it.items, out, terminals)
            out.append("]")
        elif terminals:
            out.extend(it.split())


def serialize(tree: MrTree | MrNode) -> str:
    """Canonical single-spaced linearization."""
    items = (tree,) if isinstance(tree, MrNode) else tree.items
    out: list[str] = []
    _serialize_items(items, out, terminals=True)
    return " ".join(out)


def extract_signature(tree: MrTree | MrNode) -> StructureSignature:
    items = (tree,) if isinstance(tree, MrNode) else tree.items
    out: list[str] = []
    _serialize_items(items, out, terminals=False)
    return StructureSignature(" ".join(out))


def _iter_terminals(items: Sequence[Item]) -> Iterator[str]:
    for it in items:
        if isinstance(it, MrNode):
            yield from _iter_terminals(it.items)
        else:
            yield from it.split()


def iter_nodes(tree: MrTree | MrNode) -> Iterator[tuple[str, MrNode, MrNode | None]]:
    """Depth-first ``(path, node, parent)`` triples."""

    def walk(items, prefix, parent):
        for i, node in enumerate(it for it in items if isinstance(it, MrNode)):
            path = f"{prefix}/{node.label}[{i}]" if prefix else f"{node.label}[{i}]"
            yield path, node, parent
            yield from walk(node.items, path, node)

    items = (tree,) if isinstance(tree, MrNode) else tree.items
    yield from walk(items, "", None)


_ALLOWED_CHILDREN = {
    NodeKind.DISCOURSE_RELATION: {NodeKind.DISCOURSE_RELATION, NodeKind.DIALOG_ACT},
    NodeKind.DIALOG_ACT: {NodeKind.ARGUMENT},
    NodeKind.ARGUMENT: {NodeKind.ARGUMENT},
}


def validate(tree: MrTree | MrNode) -> list[Violation]:
    violations = []
    for path, node, parent in iter_nodes(tree):
        if not LABEL_RE.match(node.label or ""):
            violations.append(Violation(path, "label", f"invalid label {node.label!r}"))
        for tok in node.terminals:
            if "[" in tok or "]" in tok:
                violations.append(Violation(path, "terminal", f"bracket in terminal {tok!r}"))
        if parent is not None and node.kind not in _ALLOWED_CHILDREN[parent.kind]:
            violations.append(
                Violation(
                    path,
                    "nesting",
                    f"{node.kind.value} {node.label} may not appear under "
                    f"{parent.kind.value} {parent.label}",
                )
            )
    return violations


def debracket(text: str) -> str:
    """Strip structural markers from an annotated response.

    Works on the raw string, so malformed predictions are handled too.
    Whitespace is collapsed and spaces before punctuation removed.
    """
    text = _MARKER_RE.sub(" ", text)
    text = " ".join(text.split())
    return _SPACE_BEFORE_PUNCT_RE.sub(r"\1", text)

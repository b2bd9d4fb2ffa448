"""Template engine turning tree MRs into template-guided text.

Template bodies are a small DSL::

    [DG_INFORM there will be [CONDITION $condition ] Optional([HUMIDITY $humidity ]) DATETIME_AND_LOCATION ]
    IsSet($condition) ? DG_INFORM_CONDITION : DG_INFORM_CONDITION_NOT

* ``$name`` refers to the argument child labelled ``NAME`` of the node being
  rendered.
* An UPPERCASE word (two or more characters) invokes either the next unused
  child node with that label or, failing that, the template of that name in
  the current node's context.
* ``Optional(...)`` renders to nothing when any variable inside it is unset.
* ``IsSet($v) ? A : B`` dispatches to ``A`` or ``B``.
* ``[LABEL`` and ``]`` are structural markers, emitted only in annotated mode.

Everything else is literal text.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, TextIO, Union

from compgen.mr_tree import LABEL_RE, MrNode, MrTree, serialize

__all__ = [
    "Literal",
    "VarRef",
    "Invoke",
    "Optional",
    "Conditional",
    "StructMarker",
    "Template",
    "TemplateRegistry",
    "RenderMode",
    "TemplateError",
    "DslSyntaxError",
    "UnknownFunction",
    "DuplicateTemplate",
    "RenderError",
    "MissingTemplate",
    "UnboundVariable",
    "parse_template",
    "load_registry",
    "render",
]

FUNCTIONS = ("Optional", "IsSet")


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class VarRef:
    name: str

    @property
    def label(self) -> str:
        return self.name.upper()


@dataclass(frozen=True)
class Invoke:
    name: str


@dataclass(frozen=True)
class Optional:
    body: tuple


@dataclass(frozen=True)
class Conditional:
    """``IsSet(var) ? then : otherwise``; IsSet is the only predicate."""

    var: VarRef
    then: tuple
    otherwise: tuple


@dataclass(frozen=True)
class StructMarker:
    label: str | None  # None closes the innermost span

    @property
    def is_open(self) -> bool:
        return self.label is not None


AstItem = Union[Literal, VarRef, Invoke, Optional, Conditional, StructMarker]


@dataclass(frozen=True)
class Template:
    name: str
    body: tuple[AstItem, ...]
    source: str = field(default="", compare=False)


class TemplateError(Exception):
    pass


class DslSyntaxError(TemplateError):
    def __init__(self, message: str, position: int | None = None, template: str | None = None):
        self.position = position
        self.template = template
        where = []
        if template:
            where.append(f"template {template}")
        if position is not None:
            where.append(f"offset {position}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class UnknownFunction(DslSyntaxError):
    def __init__(self, name: str, position: int | None = None, template: str | None = None):
        self.name = name
        super().__init__(f"unknown function {name!r}", position, template)


class DuplicateTemplate(TemplateError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"duplicate template {name!r}")


class RenderError(TemplateError):
    def __init__(self, message: str, path: str):
        self.path = path
        super().__init__(f"{message} at {path or '<root>'}")


class MissingTemplate(RenderError):
    def __init__(self, label: str, path: str):
        self.label = label
        super().__init__(f"no template or child for {label!r}", path)


class UnboundVariable(RenderError):
    def __init__(self, name: str, path: str):
        self.name = name
        super().__init__(f"unbound variable ${name}", path)


# --------------------------------------------------------------------------
# Parsing

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_VAR_RE = re.compile(r"\$([A-Za-z_][A-Za-z0-9_]*)")
_INVOKE_RE = re.compile(r"[A-Z][A-Z0-9_]*[A-Z0-9]\Z")
_MARKER_OPEN_RE = re.compile(r"\[([A-Za-z][A-Za-z0-9_]*)")


class _Parser:
    def __init__(self, name: str, text: str):
        self.name = name
        self.text = text
        self.pos = 0

    def error(self, message: str, pos: int | None = None) -> DslSyntaxError:
        return DslSyntaxError(message, self.pos if pos is None else pos, self.name)

    def parse(self) -> tuple[AstItem, ...]:
        items = self.sequence(closing=None)
        if self.pos < len(self.text):
            raise self.error(f"unexpected {self.text[self.pos]!r}")
        return items

    def sequence(self, closing: str | None) -> tuple[AstItem, ...]:
        items: list[AstItem] = []
        literal: list[str] = []
        depth = 0  # literal parentheses opened inside this sequence

        def flush():
            if literal:
                items.append(Literal("".join(literal)))
                literal.clear()

        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch == ")" and closing == ")" and depth == 0:
                break
            if ch == "$":
                m = _VAR_RE.match(text, self.pos)
                if not m:
                    raise self.error("'$' must be followed by a variable name")
                flush()
                items.append(VarRef(m.group(1).lower()))
                self.pos = m.end()
            elif ch == "[":
                m = _MARKER_OPEN_RE.match(text, self.pos)
                if not m:
                    raise self.error("'[' must be followed by a label")
                flush()
                items.append(StructMarker(m.group(1).upper()))
                self.pos = m.end()
            elif ch == "]":
                flush()
                items.append(StructMarker(None))
                self.pos += 1
            elif ch.isalpha() or ch == "_":
                m = _IDENT_RE.match(text, self.pos)
                word, end = m.group(), m.end()
                if end < len(text) and text[end] == "(":
                    flush()
                    items.append(self.call(word))
                elif _INVOKE_RE.match(word):
                    flush()
                    items.append(Invoke(word))
                    self.pos = end
                else:
                    literal.append(word)
                    self.pos = end
            else:
                if ch == "(":
                    depth += 1
                elif ch == ")":
                    if depth == 0:
                        raise self.error("unbalanced ')'")
                    depth -= 1
                literal.append(ch)
                self.pos += 1
        if depth:
            raise self.error("unbalanced '('")
        flush()
        return tuple(items)

    def call(self, fname: str) -> AstItem:
        start = self.pos
        open_paren = start + len(fname)
        self.pos = open_paren + 1
        body = self.sequence(closing=")")
        if self.pos >= len(self.text) or self.text[self.pos] != ")":
            raise self.error(f"unbalanced '(' in {fname}(", open_paren)
        self.pos += 1
        if fname not in FUNCTIONS:
            raise UnknownFunction(fname, start, self.name)
        if fname == "Optional":
            return Optional(body)
        # IsSet: exactly one variable, then the ternary tail
        args = [it for it in body if not (isinstance(it, Literal) and not it.text.strip())]
        if len(args) != 1 or not isinstance(args[0], VarRef):
            raise self.error("IsSet takes exactly one $variable", start)
        then = self._branch("?")
        otherwise = self._branch(":")
        return Conditional(args[0], (Invoke(then),), (Invoke(otherwise),))

    def _branch(self, sep: str) -> str:
        text = self.text
        while self.pos < len(text) and text[self.pos].isspace():
            self.pos += 1
        if self.pos >= len(text) or text[self.pos] != sep:
            raise self.error(f"expected {sep!r} in conditional")
        self.pos += 1
        while self.pos < len(text) and text[self.pos].isspace():
            self.pos += 1
        m = _IDENT_RE.match(text, self.pos)
        if not m or not _INVOKE_RE.match(m.group()):
            raise self.error("conditional branch must be a template name")
        self.pos = m.end()
        return m.group()


def parse_template(name: str, body: str) -> Template:
    if not body or not body.strip():
        raise DslSyntaxError("empty template body", 0, name)
    if not LABEL_RE.match(name):
        raise DslSyntaxError(f"invalid template name {name!r}", None, name)
    return Template(name, _Parser(name, body).parse(), source=body)


class TemplateRegistry(dict):
    """Mapping of template name to :class:`Template`."""

    def add(self, template: Template) -> None:
        if template.name in self:
            raise DuplicateTemplate(template.name)
        self[template.name] = template

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> TemplateRegistry:
        reg = cls()
        for name, body in pairs:
            reg.add(parse_template(name, body))
        return reg


def load_registry(stream: TextIO | str) -> TemplateRegistry:
    """Read ``NAME<TAB>BODY`` lines; ``#`` lines and blank lines are skipped."""
    if isinstance(stream, str):
        stream = stream.splitlines()
    pairs = []
    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        name, sep, body = line.partition("\t")
        if not sep:
            raise DslSyntaxError(f"line {lineno}: expected NAME<TAB>BODY")
        pairs.append((name.strip(), body.strip()))
    return TemplateRegistry.from_pairs(pairs)


# --------------------------------------------------------------------------
# Rendering


class RenderMode(str, enum.Enum):
    PLAIN = "plain"
    ANNOTATED = "annotated"


class _Unset(Exception):
    """Raised inside Optional when a variable is not bound."""


_SPACE_BEFORE_PUNCT_RE = re.compile(r"\s+([,.;:!?])")


class _Frame:
    """Render context for one MR node."""

    def __init__(self, node: MrNode, path: str):
        self.node = node
        self.path = path
        self.used: dict[str, int] = {}

    def next_child(self, label: str) -> MrNode | None:
        start = self.used.get(label, 0)
        seen = 0
        for c in self.node.children:
            if c.label == label:
                if seen == start:
                    self.used[label] = start + 1
                    return c
                seen += 1
        return None

    def lookup(self, var: VarRef) -> MrNode | None:
        c = self.node.child(var.label)
        if c is None or not c.flat_text():
            return None
        return c


class _Renderer:
    def __init__(self, registry: TemplateRegistry, mode: RenderMode):
        self.registry = registry
        self.annotated = mode == RenderMode.ANNOTATED

    def node(self, node: MrNode, path: str) -> list[str]:
        template = self.registry.get(node.label)
        if template is None:
            raise MissingTemplate(node.label, path)
        return self.items(template.body, _Frame(node, path), optional=False, stack=(node.label,))

    def items(self, items, frame: _Frame, optional: bool, stack: tuple) -> list[str]:
        out: list[str] = []
        for it in items:
            if isinstance(it, Literal):
                out.append(it.text)
            elif isinstance(it, VarRef):
                arg = frame.lookup(it)
                if arg is None:
                    if optional:
                        raise _Unset()
                    raise UnboundVariable(it.name, frame.path)
                out.append(self.value(arg))
            elif isinstance(it, StructMarker):
                if self.annotated:
                    out.append(f" [{it.label} " if it.is_open else " ] ")
            elif isinstance(it, Optional):
                used = dict(frame.used)
                try:
                    out.extend(self.items(it.body, frame, optional=True, stack=stack))
                except _Unset:
                    frame.used = used
            elif isinstance(it, Conditional):
                branch = it.then if frame.lookup(it.var) is not None else it.otherwise
                out.extend(self.items(branch, frame, optional, stack))
            elif isinstance(it, Invoke):
                out.append(" ")
                out.extend(self.invoke(it.name, frame, optional, stack))
                out.append(" ")
            else:  # pragma: no cover
                raise TypeError(it)
        return out

    def invoke(self, name: str, frame: _Frame, optional: bool, stack: tuple) -> list[str]:
        child = frame.next_child(name)
        if child is not None:
            path = f"{frame.path}/{child.label}"
            return self.node(child, path)
        template = self.registry.get(name)
        if template is None:
            if optional:
                raise _Unset()
            raise MissingTemplate(name, frame.path)
        if name in stack:
            raise RenderError(f"recursive template invocation {' -> '.join(stack + (name,))}", frame.path)
        return self.items(template.body, frame, optional, stack + (name,))

    def value(self, arg: MrNode) -> str:
        if self.annotated:
            inner = serialize(MrTree(arg.items))
            return f" {inner} "
        return arg.flat_text()


def _finish(pieces: list[str], annotated: bool) -> str:
    text = " ".join("".join(pieces).split())
    if not annotated:
        text = _SPACE_BEFORE_PUNCT_RE.sub(r"\1", text)
    return text


def render(mr: MrTree | MrNode, registry: TemplateRegistry, mode: RenderMode | str = RenderMode.PLAIN) -> str:
    """Render ``mr`` with ``registry``.

    Plain mode gives the model input text; annotated mode keeps bracketed
    spans so the output parses back into a tree with the same skeleton.
    """
    mode = RenderMode(mode)
    r = _Renderer(registry, mode)
    nodes = (mr,) if isinstance(mr, MrNode) else mr.nodes
    pieces: list[str] = []
    for i, node in enumerate(nodes):
        pieces.append(" ")
        pieces.extend(r.node(node, f"{node.label}[{i}]"))
    return _finish(pieces, mode == RenderMode.ANNOTATED)

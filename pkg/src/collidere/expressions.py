"""Type expressions such as ``2A3+4A1`` or ``K(4,3)+@graph.json``.

Grammar::

    expr := term ("+" term)*
    term := [count] name | [count] "@" path | [count] key

``name`` follows the registry (``A7``, ``D6``, ``J10``, ``K5``, ``K(3,4)``...),
``path`` points at a graph file, and ``key`` is a canonical level-tree key
such as ``(1:(2:•,•),•)`` so every type, named or not, can be written down.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .graph import (
    LEAF_KEY,
    GraphError,
    LevelTree,
    SingularityType,
    UnknownName,
    canonical_form,
    load_graph,
    make_named_type,
    type_from_tree,
)


class ExpressionError(SyntaxError):
    """Malformed expression; ``offset`` is the 0-based position of the problem."""

    def __init__(self, message: str, text: str, offset: int):
        super().__init__(f"{message} at position {offset}: {text!r}")
        self.text = text
        self.offset = offset


@dataclass(frozen=True)
class TypeExpression:
    text: str
    terms: tuple[tuple[int, SingularityType], ...]

    def types(self) -> list[SingularityType]:
        return [t for n, t in self.terms for _ in range(n)]


_COUNT = re.compile(r"\d+")
_NAME = re.compile(r"K\(\d+,\d+\)|[A-Za-z]+\d*")


def _parse_key(text: str, pos: int) -> tuple[LevelTree | int, int]:
    if text.startswith(LEAF_KEY, pos):
        return 0, pos + len(LEAF_KEY)
    m = re.compile(r"\((\d+):").match(text, pos)
    if not m:
        raise ExpressionError("expected a level-tree key", text, pos)
    pos = m.end()
    children = []
    while True:
        child, pos = _parse_key(text, pos)
        children.append(child)
        if pos < len(text) and text[pos] == ",":
            pos += 1
            continue
        if pos < len(text) and text[pos] == ")":
            return LevelTree(int(m.group(1)), tuple(children)), pos + 1
        raise ExpressionError("unterminated level-tree key", text, pos)


def type_from_key(key: str) -> SingularityType:
    tree, end = _parse_key(key, 0)
    if end != len(key) or not isinstance(tree, LevelTree):
        raise ExpressionError("trailing characters after key", key, end)
    counter = iter(range(10**9))

    def number(node):
        if isinstance(node, LevelTree):
            return LevelTree(node.level, tuple(number(c) for c in node.children))
        return next(counter)

    try:
        t = canonical_form(type_from_tree(number(tree)).graph)
    except GraphError as exc:
        raise ExpressionError(f"invalid level-tree key ({exc})", key, 0) from None
    if t.key != key:
        raise ExpressionError(f"key is not canonical (canonical form is {t.key})", key, 0)
    return t


def parse_type(token: str, base: Path | None = None) -> SingularityType:
    if token.startswith("@"):
        path = Path(token[1:])
        if base is not None and not path.is_absolute():
            path = base / path
        return canonical_form(load_graph(path))
    if token.startswith("("):
        return type_from_key(token)
    return make_named_type(token)


def parse_expression(text: str, base: Path | None = None) -> TypeExpression:
    """Parse into an exact multiset; ``base`` resolves relative graph paths."""
    s = text.strip()
    if not s:
        raise ExpressionError("empty expression", text, 0)
    terms: Counter = Counter()
    order: list[SingularityType] = []
    pos = 0
    while True:
        while pos < len(s) and s[pos].isspace():
            pos += 1
        count = 1
        m = _COUNT.match(s, pos)
        if m and not (m.end() < len(s) and s[m.end()] == ":"):
            count = int(m.group())
            if count < 1:
                raise ExpressionError("count must be at least 1", text, pos)
            pos = m.end()
            while pos < len(s) and s[pos].isspace():
                pos += 1
        start = pos
        if pos < len(s) and s[pos] == "@":
            end = s.find("+", pos)
            end = len(s) if end < 0 else end
            token = s[pos:end].strip()
            if token == "@":
                raise ExpressionError("missing graph file after '@'", text, pos)
            pos = end
        elif pos < len(s) and s[pos] == "(":
            _, pos = _parse_key(s, pos)
            token = s[start:pos]
        else:
            m = _NAME.match(s, pos)
            if not m:
                raise ExpressionError("expected a type name", text, pos)
            token = m.group()
            pos = m.end()
        try:
            t = parse_type(token, base)
        except UnknownName as exc:
            raise UnknownName(f"{exc} (at position {start})") from None
        if t not in terms:
            order.append(t)
        terms[t] += count
        while pos < len(s) and s[pos].isspace():
            pos += 1
        if pos == len(s):
            break
        if s[pos] != "+":
            raise ExpressionError("expected '+'", text, pos)
        pos += 1
    ordered = sorted(order, key=lambda t: (-t.delta, -t.r, t.key))
    return TypeExpression(text, tuple((terms[t], t) for t in ordered))


def _grouped(types: Iterable[SingularityType]) -> list[tuple[int, SingularityType]]:
    counts = Counter(types)
    return [(counts[t], t) for t in sorted(counts, key=lambda t: (-t.delta, -t.r, t.key))]


def format_expression(types: Iterable[SingularityType]) -> str:
    """Machine form, e.g. ``2A7+4A1``; parses back to the same multiset."""
    return "+".join(f"{n if n > 1 else ''}{t.label}" for n, t in _grouped(types))


def pretty_expression(types: Iterable[SingularityType]) -> str:
    """Human form, e.g. ``2A_7 + 4A_1``."""
    return " + ".join(f"{n if n > 1 else ''}{t.pretty}" for n, t in _grouped(types))

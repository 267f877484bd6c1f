"""Penn-style bracket (s-expression) reader and writer.

External format: UTF-8, one tree per line.  A node whose only child is a
bare token is a preterminal and is represented as a leaf, so
``parse_bracket(emit_bracket(t))`` is the structural identity.
"""
from __future__ import annotations

from typing import Iterable

from .trees import ConstNode, ConstTree, TokenSeq


class BracketParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{msg} at line {line}, column {col}")
        self.line = line
        self.col = col


def _tokenize(text: str):
    """Yield ('(', ')', or atom, line, col) triples."""
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c.isspace():
            col += 1
            i += 1
        elif c in "()":
            yield c, line, col
            col += 1
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j], line, col
            col += j - i
            i = j


def parse_bracket(text: str) -> ConstTree:
    """Parse one s-expression tree into a ConstTree.

    Raises BracketParseError (with line/column) on unbalanced parentheses,
    empty nodes, or nodes with a label but no content.
    """
    toks = list(_tokenize(text))
    if not toks:
        raise BracketParseError("empty input", 1, 1)

    pos = 0

    def parse_node() -> ConstNode:
        nonlocal pos
        tok, line, col = toks[pos]
        if tok != "(":
            raise BracketParseError(f"expected '(' but found {tok!r}", line, col)
        pos += 1
        if pos >= len(toks):
            raise BracketParseError("unbalanced parentheses", line, col)
        label, lline, lcol = toks[pos]
        if label in "()":
            raise BracketParseError("empty node label", lline, lcol)
        pos += 1
        children: list[ConstNode] = []
        atoms: list[str] = []
        while True:
            if pos >= len(toks):
                raise BracketParseError("unbalanced parentheses", line, col)
            tok, tline, tcol = toks[pos]
            if tok == ")":
                pos += 1
                break
            if tok == "(":
                children.append(parse_node())
                atoms.append("")
            else:
                children.append(ConstNode("X", token=tok))
                atoms.append(tok)
                pos += 1
        if not children:
            raise BracketParseError("node with no children", line, col)
        if len(children) == 1 and atoms[0]:
            # Preterminal: the enclosing label belongs to the leaf itself.
            return ConstNode(label, token=atoms[0])
        return ConstNode(label, children=children)

    root = parse_node()
    if pos != len(toks):
        tok, line, col = toks[pos]
        raise BracketParseError("unbalanced parentheses (trailing input)", line, col)
    return ConstTree(root)


def emit_bracket(tree: ConstTree) -> str:
    """Canonical single-line s-expression: one space between items, no outer
    whitespace."""

    def emit(n: ConstNode) -> str:
        if n.is_leaf:
            return f"({n.label} {n.token})"
        return "(" + n.label + " " + " ".join(emit(c) for c in n.children) + ")"

    return emit(tree.root)


def read_bracket_file(path: str) -> list[ConstTree]:
    trees = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                trees.append(parse_bracket(line))
            except BracketParseError as e:
                raise BracketParseError(str(e), lineno, e.col) from e
    return trees


def write_bracket_file(path: str, trees: Iterable[ConstTree]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for t in trees:
            f.write(emit_bracket(t) + "\n")

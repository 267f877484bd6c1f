"""CoNLL-style dependency table reader and writer.

External format: UTF-8, tab-separated columns ID, Word, Lemma, POS, Head,
DepRel; blank line between sentences.  Heads are 1-based with 0 meaning
root externally; internal representation is 0-based with the ROOT sentinel.
Lemma and POS columns round-trip verbatim, "_" when absent.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .trees import ROOT, DepTree, TokenSeq

COLUMNS = ("ID", "Word", "Lemma", "POS", "Head", "DepRel")


class ConllParseError(ValueError):
    pass


@dataclass(frozen=True)
class ConllSentence:
    tokens: TokenSeq
    tree: DepTree
    lemmas: tuple[str, ...]
    pos: tuple[str, ...]


def parse_conll(text: str) -> list[ConllSentence]:
    sentences = []
    block: list[tuple[int, list[str]]] = []
    for lineno, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            if block:
                sentences.append(_parse_block(block))
                block = []
            continue
        cols = line.rstrip("\n").split("\t")
        if len(cols) != 6:
            raise ConllParseError(f"line {lineno}: expected 6 columns, got {len(cols)}")
        block.append((lineno, cols))
    if block:
        sentences.append(_parse_block(block))
    return sentences


def _parse_block(block: list[tuple[int, list[str]]]) -> ConllSentence:
    words, lemmas, pos, heads, rels = [], [], [], [], []
    for expect_id, (lineno, cols) in enumerate(block, 1):
        try:
            row_id = int(cols[0])
        except ValueError:
            raise ConllParseError(f"line {lineno}: non-integer ID {cols[0]!r}") from None
        if row_id != expect_id:
            raise ConllParseError(f"line {lineno}: ID sequence gap (got {row_id}, expected {expect_id})")
        try:
            head = int(cols[4])
        except ValueError:
            raise ConllParseError(f"line {lineno}: non-integer Head {cols[4]!r}") from None
        if not (0 <= head <= len(block)):
            raise ConllParseError(f"line {lineno}: head {head} out of range")
        words.append(cols[1])
        lemmas.append(cols[2])
        pos.append(cols[3])
        heads.append(ROOT if head == 0 else head - 1)
        rels.append(cols[5])
    return ConllSentence(
        tokens=TokenSeq(tuple(words)),
        tree=DepTree(heads=tuple(heads), labels=tuple(rels)),
        lemmas=tuple(lemmas),
        pos=tuple(pos),
    )


def emit_conll(sentences: Iterable[ConllSentence]) -> str:
    out = []
    for sent in sentences:
        labels = sent.tree.labels or ("_",) * len(sent.tree)
        for i, (word, lemma, p, head, rel) in enumerate(
            zip(sent.tokens.tokens, sent.lemmas, sent.pos, sent.tree.heads, labels)
        ):
            ext_head = 0 if head == ROOT else head + 1
            out.append(f"{i + 1}\t{word}\t{lemma}\t{p}\t{ext_head}\t{rel}")
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def dep_to_conll_sentence(tokens: TokenSeq, tree: DepTree,
                          lemmas: Optional[tuple[str, ...]] = None,
                          pos: Optional[tuple[str, ...]] = None) -> ConllSentence:
    n = len(tokens)
    return ConllSentence(tokens, tree, lemmas or ("_",) * n, pos or ("_",) * n)


def read_conll_file(path: str) -> list[ConllSentence]:
    with open(path, encoding="utf-8") as f:
        return parse_conll(f.read())


def write_conll_file(path: str, sentences: Iterable[ConllSentence]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(emit_conll(sentences))

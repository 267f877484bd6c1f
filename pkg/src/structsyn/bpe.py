"""Byte-pair-encoding tokenizer: training, encoding, model file I/O.

Merges operate on plain character symbols; the end-of-word marker is
suffixed to the final piece of each encoded word so detokenization is
reversible.  Merges are applied greedily in rank order, so encoding is
deterministic and the concatenation of the pieces (markers stripped)
always restores the word.  Unknown characters fall back to character
symbols, so encoding never produces <unk>.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

EOW = "</w>"


@dataclass(frozen=True)
class BpeModel:
    merges: tuple[tuple[str, str], ...]
    base_size: int
    _ranks: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_ranks", {p: i for i, p in enumerate(self.merges)})


def train_bpe(corpus: Iterable[Iterable[str]], target_size: int) -> BpeModel:
    """Learn merges until the symbol inventory reaches target_size or no
    pair repeats.  Pair-frequency ties break lexicographically (smallest
    pair merged) for cross-platform determinism.
    """
    word_counts = Counter()
    for sent in corpus:
        word_counts.update(sent)
    if not word_counts:
        raise ValueError("empty corpus")

    words = {w: tuple(w) for w in word_counts}
    inventory = {c for w in words for c in w}
    base_size = len(inventory)
    if target_size < base_size:
        raise ValueError(
            f"target_size {target_size} smaller than base character inventory {base_size}")

    merges: list[tuple[str, str]] = []
    while len(inventory) < target_size:
        pair_counts = Counter()
        for w, syms in words.items():
            c = word_counts[w]
            for pair in zip(syms, syms[1:]):
                pair_counts[pair] += c
        if not pair_counts:
            break
        best = min(pair_counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        if pair_counts[best] < 2:
            break
        merges.append(best)
        merged = best[0] + best[1]
        inventory.add(merged)
        words = {w: _apply_merge(syms, best, merged) for w, syms in words.items()}
    return BpeModel(tuple(merges), base_size)


def _apply_merge(syms: tuple[str, ...], pair: tuple[str, str], merged: str) -> tuple[str, ...]:
    out = []
    i = 0
    while i < len(syms):
        if i + 1 < len(syms) and (syms[i], syms[i + 1]) == pair:
            out.append(merged)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return tuple(out)


def bpe_encode(model: BpeModel, word: str) -> list[str]:
    """Encode one word; the last piece carries the end-of-word marker."""
    if not word:
        return []
    syms = list(word)
    ranks = model._ranks
    while len(syms) > 1:
        best_rank, best_idx = None, None
        for i, pair in enumerate(zip(syms, syms[1:])):
            r = ranks.get(pair)
            if r is not None and (best_rank is None or r < best_rank):
                best_rank, best_idx = r, i
        if best_idx is None:
            break
        syms[best_idx: best_idx + 2] = [syms[best_idx] + syms[best_idx + 1]]
    syms[-1] = syms[-1] + EOW
    return syms


def strip_marker(piece: str) -> str:
    return piece[: -len(EOW)] if piece.endswith(EOW) else piece


def decode_pieces(pieces: Iterable[str]) -> str:
    return "".join(strip_marker(p) for p in pieces)


def save_bpe(model: BpeModel, path: str) -> None:
    """Model file: header line with the base inventory size, then one merge
    per line "left right"."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{model.base_size}\n")
        for a, b in model.merges:
            f.write(f"{a} {b}\n")


def load_bpe(path: str) -> BpeModel:
    with open(path, encoding="utf-8") as f:
        base_size = int(f.readline().strip())
        merges = []
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            a, b = line.split(" ")
            merges.append((a, b))
    return BpeModel(tuple(merges), base_size)

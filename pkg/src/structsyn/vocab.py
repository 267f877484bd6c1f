"""Word-frequency vocabulary with reserved special tokens.

File format: one token per line, line number (0-based) = id.
"""
from __future__ import annotations

from collections import Counter
from typing import Iterable

UNK = "<unk>"
PAD = "<pad>"
MASK = "<mask>"
RESERVED = (UNK, PAD, MASK)


class Vocab:
    """Immutable bidirectional token/id map with dense ids 0..size-1."""

    def __init__(self, tokens: Iterable[str]):
        self._id_to_token = tuple(tokens)
        self._token_to_id = {t: i for i, t in enumerate(self._id_to_token)}
        if len(self._token_to_id) != len(self._id_to_token):
            raise ValueError("duplicate token in vocabulary")
        for r in RESERVED:
            if r not in self._token_to_id:
                raise ValueError(f"reserved token {r} missing")

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id(self, token: str) -> int:
        return self._token_to_id.get(token, self._token_to_id[UNK])

    def token(self, idx: int) -> str:
        return self._id_to_token[idx]

    @property
    def unk_id(self) -> int:
        return self._token_to_id[UNK]

    @property
    def pad_id(self) -> int:
        return self._token_to_id[PAD]

    @property
    def mask_id(self) -> int:
        return self._token_to_id[MASK]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for t in self._id_to_token:
                f.write(t + "\n")

    @classmethod
    def load(cls, path: str) -> "Vocab":
        with open(path, encoding="utf-8") as f:
            return cls(line.rstrip("\n") for line in f if line.rstrip("\n"))


def build_word_vocab(corpus: Iterable[Iterable[str]], size: int) -> Vocab:
    """Keep the (size - reserved) most frequent tokens plus reserved tokens.

    Frequency ties break lexicographically (smaller token kept) so the
    result is a deterministic function of the corpus.
    """
    if size < len(RESERVED) + 1:
        raise ValueError(f"size must be at least {len(RESERVED) + 1}")
    counts = Counter()
    for sent in corpus:
        counts.update(sent)
    if not counts:
        raise ValueError("empty corpus")
    counts = {t: c for t, c in counts.items() if t not in RESERVED}
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [t for t, _ in ranked[: size - len(RESERVED)]]
    return Vocab(list(RESERVED) + kept)

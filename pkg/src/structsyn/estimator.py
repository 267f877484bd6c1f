"""Scikit-learn-style estimator facade over the training and induction
pipeline.

fit() takes raw tokenized sentences (lists of strings), builds the
vocabulary, trains the model; transform() yields the predicted syntactic
scalars and predict() the induced trees.  All constructor arguments are
stored verbatim (sklearn convention), so get_params/set_params and clone
work out of the box.
"""
from __future__ import annotations

from typing import Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .induction import distances_to_tree, heights_and_tree_to_dep
from .model import ModelConfig, encoder_forward, init_params
from .training import TrainConfig, train
from .trees import ConstTree, DepTree, SyntaxProfile, TokenSeq
from .vocab import build_word_vocab


class StructureInducer(BaseEstimator):
    """Unsupervised constituency/dependency induction via MLM pretraining.

    Defaults use the tiny desk profile so the estimator is usable in
    tests; scale the architecture arguments up for real corpora.
    """

    def __init__(self, arch: str = "structformer", parser_pos: int = 0,
                 vocab_size: int = 1000, d_model: int = 64, n_layers: int = 2,
                 n_heads: int = 2, d_ff: int = 128, parser_layers: int = 1,
                 conv_kernel: int = 3, max_seq_len: int = 64,
                 dropout: float = 0.0, mask_rate: float = 0.3,
                 batch_tokens: int = 128, epochs: int = 2, lr: float = 5e-4,
                 warmup_steps: int = 50, max_steps: Optional[int] = None,
                 seed: int = 0):
        self.arch = arch
        self.parser_pos = parser_pos
        self.vocab_size = vocab_size
        self.d_model = d_model
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.d_ff = d_ff
        self.parser_layers = parser_layers
        self.conv_kernel = conv_kernel
        self.max_seq_len = max_seq_len
        self.dropout = dropout
        self.mask_rate = mask_rate
        self.batch_tokens = batch_tokens
        self.epochs = epochs
        self.lr = lr
        self.warmup_steps = warmup_steps
        self.max_steps = max_steps
        self.seed = seed

    def _model_config(self) -> ModelConfig:
        return ModelConfig(
            vocab_size=self.vocab_size, d_model=self.d_model,
            n_layers=self.n_layers, n_heads=self.n_heads, d_ff=self.d_ff,
            dropout=self.dropout, parser_layers=self.parser_layers,
            conv_kernel=self.conv_kernel, parser_pos=self.parser_pos,
            max_seq_len=self.max_seq_len, seed=self.seed)

    def fit(self, X: Sequence[Sequence[str]], y=None,
            valid: Optional[Sequence[Sequence[str]]] = None) -> "StructureInducer":
        """Build the vocabulary from X and pretrain with the MLM objective.

        valid defaults to the training sentences (adequate for the tiny
        runs this facade targets).
        """
        sentences = [list(s) for s in X]
        if not sentences:
            raise ValueError("empty training corpus")
        self.vocab_ = build_word_vocab(sentences, self.vocab_size)
        encoded = [self.vocab_.encode(s) for s in sentences]
        valid_encoded = (encoded if valid is None
                         else [self.vocab_.encode(list(s)) for s in valid])
        state = init_params(self._model_config())
        cfg = TrainConfig(
            mask_rate=self.mask_rate, batch_tokens=self.batch_tokens,
            epochs=self.epochs, lr=self.lr, warmup_steps=self.warmup_steps,
            seed=self.seed, arch=self.arch)
        result = train(state, encoded, valid_encoded, cfg, self.vocab_,
                       max_steps=self.max_steps)
        self.state_ = result.best_state
        self.history_ = result.history
        self.best_valid_loss_ = result.best_valid_loss
        return self

    def _profile(self, sentence: Sequence[str]) -> SyntaxProfile:
        ids = self.vocab_.encode(list(sentence))
        _, profile, _ = encoder_forward(ids, self.state_)
        return profile

    def transform(self, X: Sequence[Sequence[str]]) -> list[SyntaxProfile]:
        """Predicted syntactic distances and heights per sentence."""
        check_is_fitted(self, "state_")
        if self.arch == "vanilla":
            raise ValueError("vanilla architecture has no parser network")
        return [self._profile(s) for s in X]

    def predict(self, X: Sequence[Sequence[str]]) -> list[ConstTree]:
        """Induced binary constituency tree per sentence."""
        return [distances_to_tree(TokenSeq(tuple(s)), p.distances)
                for s, p in zip(X, self.transform(X))]

    def predict_dependencies(self, X: Sequence[Sequence[str]]) -> list[DepTree]:
        """Induced dependency tree per sentence."""
        out = []
        for s, p in zip(X, self.transform(X)):
            tree = distances_to_tree(TokenSeq(tuple(s)), p.distances)
            out.append(heights_and_tree_to_dep(p.heights, tree))
        return out

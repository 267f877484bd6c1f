"""Masked-language-model training: masking, loss, Adam with warmup then
inverse-sqrt decay, validation-based checkpointing, and the adapted MLM
perplexity.

The loop is sequential and deterministic given the run seed: same seed,
same data order, bitwise-identical checkpoints.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .model import ModelConfig, ModelState, _tensors, encoder_forward_t, vanilla_forward_t
from .vocab import Vocab


class NoMaskedTokens(Exception):
    """Raised when a batch has no masked position; callers skip the batch."""


@dataclass(frozen=True)
class TrainConfig:
    mask_rate: float = 0.3
    batch_tokens: int = 4096
    epochs: int = 100
    lr: float = 5e-4
    warmup_steps: int = 200
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    eval_mask_seed: int = 12345
    seed: int = 0
    checkpoint_path: Optional[str] = None
    metrics_path: Optional[str] = None
    arch: str = "structformer"  # or "vanilla"

    def __post_init__(self):
        if not (0.0 <= self.mask_rate <= 1.0):
            raise ValueError("mask_rate must be in [0,1]")
        if self.arch not in ("structformer", "vanilla"):
            raise ValueError("arch must be structformer or vanilla")

    @classmethod
    def desk(cls, **overrides) -> "TrainConfig":
        base = dict(batch_tokens=128, epochs=2, warmup_steps=50)
        base.update(overrides)
        return cls(**base)


@dataclass
class MaskedSentence:
    input_ids: np.ndarray     # with <mask> substitutions, pads stripped
    target_ids: np.ndarray    # original ids at masked positions
    positions: np.ndarray     # masked position indices


def strip_pads(ids: Sequence[int], pad_id: int) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    return ids[ids != pad_id]


def mask_sentence(ids: Sequence[int], rate: float, rng, mask_id: int,
                  pad_id: int) -> MaskedSentence:
    """Independently mask each non-pad position with the given probability;
    masked inputs are replaced by <mask> only (no keep/random mixture)."""
    ids = strip_pads(ids, pad_id)
    draw = rng.random(len(ids))
    positions = np.nonzero(draw < rate)[0]
    inputs = ids.copy()
    inputs[positions] = mask_id
    return MaskedSentence(inputs, ids[positions], positions)


def mask_batch(batch: Sequence[Sequence[int]], rate: float, rng, mask_id: int,
               pad_id: int) -> list[MaskedSentence]:
    return [mask_sentence(ids, rate, rng, mask_id, pad_id) for ids in batch]


def mlm_loss_t(logits: Tensor, masked: MaskedSentence) -> Tensor:
    """Mean negative log-likelihood over the masked positions of one
    sentence (a Tensor, so gradients flow)."""
    if len(masked.positions) == 0:
        raise NoMaskedTokens()
    logp = ad.log_softmax(logits, axis=-1)
    picked = logp[masked.positions, masked.target_ids]
    return -picked.sum() * (1.0 / len(masked.positions))


def mlm_loss(logits: np.ndarray, masked: MaskedSentence) -> float:
    return float(mlm_loss_t(Tensor(logits), masked).data)


def batch_nll(state: ModelState, batch: list[MaskedSentence], arch: str,
              backward_scale: Optional[float] = None,
              grads: Optional[dict[str, np.ndarray]] = None) -> tuple[float, int]:
    """Total NLL and masked-token count over a batch; optionally accumulate
    parameter gradients of (total NLL * backward_scale)."""
    total, count = 0.0, 0
    for ms in batch:
        if len(ms.positions) == 0:
            continue
        t = _tensors(state)
        if arch == "vanilla":
            logits = vanilla_forward_t(ms.input_ids, t, state.config)
        else:
            logits, _, _, _ = encoder_forward_t(ms.input_ids, t, state.config)
        logp = ad.log_softmax(logits, axis=-1)
        picked = logp[ms.positions, ms.target_ids]
        nll = -picked.sum()
        total += float(nll.data)
        count += len(ms.positions)
        if grads is not None:
            nll.backward(np.asarray(backward_scale))
            for name, tensor in t.items():
                if tensor.grad is not None:
                    grads[name] += tensor.grad
    return total, count


def make_batches(order: Sequence[int], lengths: Sequence[int],
                 batch_tokens: int) -> list[list[int]]:
    """Group sentences (in the given order, stably sorted by length) into
    batches of at most batch_tokens tokens."""
    by_len = sorted(order, key=lambda i: lengths[i])
    batches: list[list[int]] = []
    cur: list[int] = []
    cur_tokens = 0
    for i in by_len:
        if cur and cur_tokens + lengths[i] > batch_tokens:
            batches.append(cur)
            cur, cur_tokens = [], 0
        cur.append(i)
        cur_tokens += lengths[i]
    if cur:
        batches.append(cur)
    return batches


class Adam:
    """Adam with linear warmup then inverse-sqrt decay."""

    def __init__(self, shapes: dict[str, tuple], cfg: TrainConfig):
        self.cfg = cfg
        self.step_num = 0
        self.m = {k: np.zeros(s) for k, s in shapes.items()}
        self.v = {k: np.zeros(s) for k, s in shapes.items()}

    def lr(self) -> float:
        s, w = self.step_num, max(self.cfg.warmup_steps, 1)
        return self.cfg.lr * min(s / w, math.sqrt(w / s))

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        c = self.cfg
        self.step_num += 1
        lr = self.lr()
        for name in sorted(params):
            g = grads[name]
            self.m[name] = c.adam_beta1 * self.m[name] + (1 - c.adam_beta1) * g
            self.v[name] = c.adam_beta2 * self.v[name] + (1 - c.adam_beta2) * g * g
            mhat = self.m[name] / (1 - c.adam_beta1 ** self.step_num)
            vhat = self.v[name] / (1 - c.adam_beta2 ** self.step_num)
            params[name] -= lr * mhat / (np.sqrt(vhat) + c.adam_eps)


def validation_loss(state: ModelState, corpus: Sequence[Sequence[int]],
                    cfg: TrainConfig, vocab: Vocab) -> float:
    """Pooled NLL per masked token with masks drawn once from the fixed
    eval seed."""
    rng = np.random.Generator(np.random.PCG64(cfg.eval_mask_seed))
    total, count = 0.0, 0
    for ids in corpus:
        ms = mask_sentence(ids, cfg.mask_rate, rng, vocab.mask_id, vocab.pad_id)
        if len(ms.positions) == 0:
            continue
        t, c = batch_nll(state, [ms], cfg.arch)
        total += t
        count += c
    if count == 0:
        raise NoMaskedTokens("no masked tokens in evaluation corpus")
    return total / count


@dataclass
class TrainResult:
    best_state: ModelState
    best_valid_loss: float
    history: list[dict] = field(default_factory=list)


def train(state: ModelState, train_corpus: Sequence[Sequence[int]],
          valid_corpus: Sequence[Sequence[int]], cfg: TrainConfig, vocab: Vocab,
          max_steps: Optional[int] = None,
          valid_loss_fn: Optional[Callable[[ModelState, int], float]] = None,
          step_callback: Optional[Callable[[int, float], None]] = None) -> TrainResult:
    """Run MLM training; persist and return the state with the smallest
    validation loss.

    valid_loss_fn can replace the real validation pass (used to verify the
    best-checkpoint logic against a known curve).
    """
    state = state.copy()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    shapes = {k: v.shape for k, v in state.params.items()}
    opt = Adam(shapes, cfg)
    lengths = [len(strip_pads(s, vocab.pad_id)) for s in train_corpus]
    history: list[dict] = []
    best_state = state.copy()
    best_valid = math.inf
    step = 0
    t0 = time.monotonic()
    metrics_f = open(cfg.metrics_path, "w") if cfg.metrics_path else None
    try:
        for epoch in range(cfg.epochs):
            order = rng.permutation(len(train_corpus))
            epoch_loss, epoch_count = 0.0, 0
            for batch_idx in make_batches(order, lengths, cfg.batch_tokens):
                if max_steps is not None and step >= max_steps:
                    break
                batch = mask_batch([train_corpus[i] for i in batch_idx],
                                   cfg.mask_rate, rng, vocab.mask_id, vocab.pad_id)
                n_masked = sum(len(ms.positions) for ms in batch)
                if n_masked == 0:
                    continue
                grads = {k: np.zeros(s) for k, s in shapes.items()}
                total, count = batch_nll(state, batch, cfg.arch,
                                         backward_scale=1.0 / n_masked, grads=grads)
                loss = total / count
                if not math.isfinite(loss):
                    raise RuntimeError(f"non-finite training loss at step {step}: {loss}")
                opt.step(state.params, grads)
                step += 1
                epoch_loss += total
                epoch_count += count
                if step_callback is not None:
                    step_callback(step, loss)
            if valid_loss_fn is not None:
                vloss = valid_loss_fn(state, epoch)
            else:
                vloss = validation_loss(state, valid_corpus, cfg, vocab)
            rec = {
                "epoch": epoch,
                "step": step,
                "train_loss": epoch_loss / max(epoch_count, 1),
                "valid_loss": vloss,
                "valid_ppl": math.exp(vloss),
                "wall_ms": int((time.monotonic() - t0) * 1000),
            }
            history.append(rec)
            if metrics_f:
                metrics_f.write(json.dumps(rec) + "\n")
                metrics_f.flush()
            if vloss < best_valid:
                best_valid = vloss
                best_state = state.copy()
                if cfg.checkpoint_path:
                    best_state.save(cfg.checkpoint_path)
            if max_steps is not None and step >= max_steps:
                break
    finally:
        if metrics_f:
            metrics_f.close()
    if cfg.epochs == 0:
        best_state = state.copy()
        best_valid = math.nan
        if cfg.checkpoint_path:
            best_state.save(cfg.checkpoint_path)
    return TrainResult(best_state, best_valid, history)


def mlm_perplexity(state: ModelState, corpus: Sequence[Sequence[int]],
                   mask_rate: float, eval_seed: int, vocab: Vocab,
                   arch: str = "structformer", mode: str = "pooled") -> float:
    """exp of the average NLL over masked tokens.

    mode="pooled" (default) pools NLL across the corpus before the exp;
    mode="per_sentence" averages per-sentence perplexities instead.
    Evaluation masks are drawn once from eval_seed.
    """
    if mode not in ("pooled", "per_sentence"):
        raise ValueError("mode must be pooled or per_sentence")
    rng = np.random.Generator(np.random.PCG64(eval_seed))
    total, count = 0.0, 0
    per_sentence: list[float] = []
    for ids in corpus:
        ms = mask_sentence(ids, mask_rate, rng, vocab.mask_id, vocab.pad_id)
        if len(ms.positions) == 0:
            continue
        t, c = batch_nll(state, [ms], arch)
        total += t
        count += c
        per_sentence.append(math.exp(t / c))
    if count == 0:
        raise NoMaskedTokens("zero masked tokens overall")
    if mode == "per_sentence":
        return float(np.mean(per_sentence))
    return math.exp(total / count)

"""Transformer encoder with a convolutional distance/height parser network
and dependency-constrained self-attention, plus the vanilla baseline.

Layers 0..m-1 ("set A") are standard pre-norm softmax-attention blocks; the
parser network consumes the residual stream after block m-1 (the raw
embeddings when m=0) and produces the per-sentence distances and heights,
from which the dependency matrix constrains the attention of layers
m..L-1 ("set B").  m=L leaves no constrained layers, so the logits path is
identical to the vanilla encoder.

All computation is float64 and runs on one sentence at a time (callers
strip padding first).  Forward passes build an autodiff graph, so the
gradient of any scalar of the outputs is available through backward().
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .depfn import dependency_matrix_t
from .trees import SyntaxProfile

LN_EPS = 1e-5


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    d_model: int = 512
    n_layers: int = 8
    n_heads: int = 8
    d_ff: int = 2048
    dropout: float = 0.1
    parser_layers: int = 3
    conv_kernel: int = 5
    parser_pos: int = 0
    max_seq_len: int = 256
    pos_encoding: str = "sinusoidal"  # or "learned"
    tie_embeddings: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if not (0 <= self.parser_pos <= self.n_layers):
            raise ValueError("parser_pos must be in 0..n_layers")
        if self.conv_kernel < 1 or self.conv_kernel % 2 == 0:
            raise ValueError("conv_kernel must be odd and >= 1")
        if self.pos_encoding not in ("sinusoidal", "learned"):
            raise ValueError("pos_encoding must be sinusoidal or learned")

    @property
    def d_head(self) -> int:
        return self.d_model // self.n_heads

    @classmethod
    def desk(cls, vocab_size: int, **overrides) -> "ModelConfig":
        """Tiny profile for tests and smoke runs."""
        base = dict(d_model=64, n_layers=2, n_heads=2, d_ff=128,
                    parser_layers=1, conv_kernel=3, max_seq_len=64, dropout=0.0)
        base.update(overrides)
        return cls(vocab_size=vocab_size, **base)


def param_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    d, v = config.d_model, config.vocab_size
    shapes: dict[str, tuple[int, ...]] = {"embed": (v, d)}
    if config.pos_encoding == "learned":
        shapes["pos"] = (config.max_seq_len, d)
    for l in range(config.n_layers):
        p = f"layer{l}."
        shapes[p + "ln1.g"] = (d,)
        shapes[p + "ln1.b"] = (d,)
        for w in ("wq", "wk", "wv", "wo"):
            shapes[p + "attn." + w] = (d, d)
        for b in ("bq", "bk", "bv", "bo"):
            shapes[p + "attn." + b] = (d,)
        shapes[p + "attn.w_parent"] = (config.n_heads,)
        shapes[p + "attn.w_child"] = (config.n_heads,)
        shapes[p + "ln2.g"] = (d,)
        shapes[p + "ln2.b"] = (d,)
        shapes[p + "ff.w1"] = (d, config.d_ff)
        shapes[p + "ff.b1"] = (config.d_ff,)
        shapes[p + "ff.w2"] = (config.d_ff, d)
        shapes[p + "ff.b2"] = (d,)
    k = config.conv_kernel
    for l in range(config.parser_layers):
        shapes[f"parser.conv{l}.w"] = (k * d, d)
        shapes[f"parser.conv{l}.b"] = (d,)
    shapes["parser.dist.win"] = (2 * d, d)
    shapes["parser.dist.bin"] = (d,)
    shapes["parser.dist.wout"] = (d, 1)
    shapes["parser.dist.bout"] = (1,)
    shapes["parser.height.win"] = (d, d)
    shapes["parser.height.bin"] = (d,)
    shapes["parser.height.wout"] = (d, 1)
    shapes["parser.height.bout"] = (1,)
    shapes["temp.mu1_raw"] = ()
    shapes["temp.mu2_raw"] = ()
    shapes["ln_f.g"] = (d,)
    shapes["ln_f.b"] = (d,)
    if not config.tie_embeddings:
        shapes["out.w"] = (d, v)
    shapes["out.b"] = (v,)
    return shapes


@dataclass
class ModelState:
    """All learnable parameters plus configuration.

    Sendable between threads; not safe to mutate concurrently.
    """

    config: ModelConfig
    params: dict[str, np.ndarray]

    def save(self, path: str) -> None:
        payload = dict(self.params)
        payload["__config__"] = np.frombuffer(
            json.dumps(asdict(self.config)).encode(), dtype=np.uint8)
        with open(path, "wb") as f:
            np.savez(f, **payload)

    @classmethod
    def load(cls, path: str) -> "ModelState":
        with np.load(path) as z:
            cfg = ModelConfig(**json.loads(bytes(z["__config__"]).decode()))
            params = {k: z[k].copy() for k in z.files if k != "__config__"}
        return cls(cfg, params)

    def copy(self) -> "ModelState":
        return ModelState(self.config, {k: v.copy() for k, v in self.params.items()})


def init_params(config: ModelConfig, seed: Optional[int] = None) -> ModelState:
    """Deterministic scaled-uniform init; biases, head weights and
    temperature pre-activations start at zero (so p_parent = p_child = 0.5
    and mu1 = mu2 = 1)."""
    rng = np.random.Generator(np.random.PCG64(config.seed if seed is None else seed))
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(config).items():
        if name.endswith((".g",)):
            params[name] = np.ones(shape)
        elif len(shape) == 2:
            bound = math.sqrt(6.0 / (shape[0] + shape[1]))
            params[name] = rng.uniform(-bound, bound, size=shape)
        else:
            params[name] = np.zeros(shape)
    return ModelState(config, params)


def sinusoidal_encoding(length: int, d_model: int) -> np.ndarray:
    pos = np.arange(length)[:, None].astype(np.float64)
    dim = np.arange(0, d_model, 2).astype(np.float64)
    angle = pos / np.power(10000.0, dim / d_model)
    enc = np.zeros((length, d_model))
    enc[:, 0::2] = np.sin(angle)
    enc[:, 1::2] = np.cos(angle)
    return enc


def _tensors(state: ModelState) -> dict[str, Tensor]:
    return {k: ad.parameter(v) for k, v in state.params.items()}


def _layer_norm(x: Tensor, g: Tensor, b: Tensor) -> Tensor:
    d = x.shape[-1]
    mean = x.sum(axis=-1, keepdims=True) * (1.0 / d)
    xc = x - mean
    var = (xc * xc).sum(axis=-1, keepdims=True) * (1.0 / d)
    return xc / ad.sqrt(var + LN_EPS) * g + b


def _dropout(x: Tensor, rate: float, rng) -> Tensor:
    if rng is None or rate <= 0.0:
        return x
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * Tensor(mask)


def _split_heads(x: Tensor, n_heads: int) -> Tensor:
    n, d = x.shape
    return x.reshape(n, n_heads, d // n_heads).transpose(1, 0, 2)


def _merge_heads(x: Tensor) -> Tensor:
    h, n, dh = x.shape
    return x.transpose(1, 0, 2).reshape(n, h * dh)


def _attention(x: Tensor, t: dict[str, Tensor], prefix: str, config: ModelConfig,
               pd: Optional[Tensor], rng) -> Tensor:
    q = _split_heads(x @ t[prefix + "wq"] + t[prefix + "bq"], config.n_heads)
    k = _split_heads(x @ t[prefix + "wk"] + t[prefix + "bk"], config.n_heads)
    v = _split_heads(x @ t[prefix + "wv"] + t[prefix + "bv"], config.n_heads)
    scores = (q @ k.transpose(0, 2, 1)) * (1.0 / math.sqrt(config.d_head))
    if pd is None:
        weights = ad.softmax(scores, axis=-1)
    else:
        gate = ad.sigmoid(scores)
        ep = ad.exp(t[prefix + "w_parent"])
        ec = ad.exp(t[prefix + "w_child"])
        denom = ep + ec
        p_parent = (ep / denom).reshape(config.n_heads, 1, 1)
        p_child = (ec / denom).reshape(config.n_heads, 1, 1)
        pmat = p_parent * pd + p_child * pd.T
        weights = pmat * gate
    weights = _dropout(weights, config.dropout, rng)
    ctx = _merge_heads(weights @ v)
    return ctx @ t[prefix + "wo"] + t[prefix + "bo"]


def _block(x: Tensor, t: dict[str, Tensor], l: int, config: ModelConfig,
           pd: Optional[Tensor], rng) -> Tensor:
    p = f"layer{l}."
    a = _attention(_layer_norm(x, t[p + "ln1.g"], t[p + "ln1.b"]),
                   t, p + "attn.", config, pd, rng)
    x = x + a
    h = ad.relu(_layer_norm(x, t[p + "ln2.g"], t[p + "ln2.b"]) @ t[p + "ff.w1"]
                + t[p + "ff.b1"])
    h = _dropout(h, config.dropout, rng)
    return x + h @ t[p + "ff.w2"] + t[p + "ff.b2"]


def _parser(z: Tensor, t: dict[str, Tensor], config: ModelConfig) -> tuple[Tensor, Tensor]:
    """Convolution stack with tanh, then the two 2-layer scalar heads."""
    n, d = z.shape
    w_half = (config.conv_kernel - 1) // 2
    for l in range(config.parser_layers):
        if w_half > 0:
            zp = ad.concat([ad.zeros((w_half, d)), z, ad.zeros((w_half, d))], axis=0)
        else:
            zp = z
        windows = ad.concat([zp[k: k + n] for k in range(config.conv_kernel)], axis=1)
        z = ad.tanh(windows @ t[f"parser.conv{l}.w"] + t[f"parser.conv{l}.b"])
    pairs = ad.concat([z[: n - 1], z[1:]], axis=1)
    dist = ad.tanh(pairs @ t["parser.dist.win"] + t["parser.dist.bin"])
    dist = (dist @ t["parser.dist.wout"] + t["parser.dist.bout"]).reshape(max(n - 1, 0))
    height = ad.tanh(z @ t["parser.height.win"] + t["parser.height.bin"])
    height = (height @ t["parser.height.wout"] + t["parser.height.bout"]).reshape(n)
    return dist, height


def _embed(ids: Sequence[int], t: dict[str, Tensor], config: ModelConfig) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    n = len(ids)
    if n == 0:
        raise ValueError("empty input")
    if n > config.max_seq_len:
        raise ValueError(f"sequence length {n} exceeds max_seq_len {config.max_seq_len}")
    if ids.min() < 0 or ids.max() >= config.vocab_size:
        raise ValueError("token id out of range")
    x = ad.take_rows(t["embed"], ids)
    if config.pos_encoding == "learned":
        x = x + t["pos"][:n]
    else:
        x = x + Tensor(sinusoidal_encoding(n, config.d_model))
    return x


def _logits(x: Tensor, t: dict[str, Tensor], config: ModelConfig) -> Tensor:
    x = _layer_norm(x, t["ln_f.g"], t["ln_f.b"])
    if config.tie_embeddings:
        return x @ t["embed"].T + t["out.b"]
    return x @ t["out.w"] + t["out.b"]


def encoder_forward_t(ids: Sequence[int], t: dict[str, Tensor], config: ModelConfig,
                      rng=None) -> tuple[Tensor, Tensor, Tensor, Tensor]:
    """Structure-constrained forward on the autodiff graph.

    Returns (logits, distances, heights, dependency matrix).
    """
    x = _embed(ids, t, config)
    m = config.parser_pos
    dist = height = pd = None

    def run_parser(stream: Tensor):
        nonlocal dist, height, pd
        dist, height = _parser(stream, t, config)
        mu1 = ad.exp(t["temp.mu1_raw"])
        mu2 = ad.exp(t["temp.mu2_raw"])
        pd = dependency_matrix_t(dist, height, mu1, mu2)

    if m == 0:
        run_parser(x)
    for l in range(config.n_layers):
        if l == m and m > 0:
            run_parser(x)
        x = _block(x, t, l, config, pd if l >= m else None, rng)
    if m == config.n_layers:
        run_parser(x)
    return _logits(x, t, config), dist, height, pd


def vanilla_forward_t(ids: Sequence[int], t: dict[str, Tensor], config: ModelConfig,
                      rng=None) -> Tensor:
    """Baseline softmax-attention encoder; no parser, no constraint."""
    x = _embed(ids, t, config)
    for l in range(config.n_layers):
        x = _block(x, t, l, config, None, rng)
    return _logits(x, t, config)


def encoder_forward(ids: Sequence[int], state: ModelState):
    """Numpy-level forward: (logits, SyntaxProfile, P_D).  Deterministic;
    dropout disabled."""
    logits, dist, height, pd = encoder_forward_t(ids, _tensors(state), state.config)
    profile = SyntaxProfile(tuple(dist.data.tolist()), tuple(height.data.tolist()))
    return logits.data, profile, pd.data


def vanilla_forward(ids: Sequence[int], state: ModelState) -> np.ndarray:
    return vanilla_forward_t(ids, _tensors(state), state.config).data


def parser_forward(embeddings: np.ndarray, state: ModelState) -> SyntaxProfile:
    """Run only the parser network on given embeddings (n x d_model)."""
    if embeddings.ndim != 2 or embeddings.shape[0] < 1:
        raise ValueError("embeddings must be (n >= 1, d_model)")
    dist, height = _parser(Tensor(embeddings), _tensors(state), state.config)
    return SyntaxProfile(tuple(dist.data.tolist()), tuple(height.data.tolist()))


def dep_constrained_attention(Q: np.ndarray, K: np.ndarray, V: np.ndarray,
                              pd: np.ndarray, w_parent: np.ndarray,
                              w_child: np.ndarray) -> np.ndarray:
    """Dependency-constrained attention on plain arrays.

    Q, K, V are (heads, n, d_head).  Per head, output_i is the plain sum
    over j of p_ij * sigmoid(QK^T/sqrt(d_k))_ij * V_j -- no softmax
    normalization of the combined weights.
    """
    if Q.shape != K.shape or Q.shape != V.shape:
        raise ValueError("Q, K, V shape mismatch")
    h, n, dk = Q.shape
    if pd.shape != (n, n):
        raise ValueError("dependency matrix shape mismatch")
    scores = Q @ np.swapaxes(K, -1, -2) / math.sqrt(dk)
    gate = 1.0 / (1.0 + np.exp(-scores))
    ep, ec = np.exp(w_parent), np.exp(w_child)
    p_parent = (ep / (ep + ec))[:, None, None]
    p_child = (ec / (ep + ec))[:, None, None]
    pmat = p_parent * pd[None, :, :] + p_child * pd.T[None, :, :]
    return (pmat * gate) @ V

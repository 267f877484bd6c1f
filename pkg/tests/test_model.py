import math

import numpy as np
import pytest

import structsyn.autodiff as ad
from structsyn.autodiff import Tensor
from structsyn.model import (
    ModelConfig,
    ModelState,
    _tensors,
    dep_constrained_attention,
    encoder_forward,
    encoder_forward_t,
    init_params,
    param_shapes,
    parser_forward,
    sinusoidal_encoding,
    vanilla_forward,
    vanilla_forward_t,
)
from structsyn.training import MaskedSentence, mlm_loss_t

V = 23


def desk_state(**overrides) -> ModelState:
    return init_params(ModelConfig.desk(vocab_size=V, **overrides))


# ----------------------------------------------------------- configuration

def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(vocab_size=V, d_model=10, n_heads=3)
    with pytest.raises(ValueError):
        ModelConfig(vocab_size=V, parser_pos=9)  # > n_layers
    with pytest.raises(ValueError):
        ModelConfig(vocab_size=V, conv_kernel=4)
    with pytest.raises(ValueError):
        ModelConfig(vocab_size=V, pos_encoding="rotary")
    assert ModelConfig(vocab_size=V).d_head == 64


def test_param_shapes_cover_init():
    cfg = ModelConfig.desk(vocab_size=V)
    state = init_params(cfg)
    shapes = param_shapes(cfg)
    assert set(state.params) == set(shapes)
    for name, shape in shapes.items():
        assert state.params[name].shape == tuple(shape)
    # gains start at one, biases and temperatures at zero
    assert np.all(state.params["layer0.ln1.g"] == 1.0)
    assert np.all(state.params["out.b"] == 0.0)
    assert state.params["temp.mu1_raw"] == 0.0


def test_init_deterministic():
    a = desk_state()
    b = desk_state()
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    c = init_params(ModelConfig.desk(vocab_size=V), seed=99)
    assert any(not np.array_equal(c.params[k], a.params[k]) for k in a.params)


def test_sinusoidal_encoding_shape():
    enc = sinusoidal_encoding(5, 8)
    assert enc.shape == (5, 8)
    assert enc[0, 0] == 0.0 and enc[0, 1] == 1.0


# ---------------------------------------------------------------- forwards

def test_forward_shapes():
    state = desk_state(parser_pos=1)
    ids = [1, 4, 9, 16, 5]
    logits, profile, pd = encoder_forward(ids, state)
    assert logits.shape == (5, V)
    assert len(profile.distances) == 4 and len(profile.heights) == 5
    assert pd.shape == (5, 5)
    assert np.all(np.diag(pd) == 0.0)


def test_forward_single_token():
    logits, profile, pd = encoder_forward([3], desk_state())
    assert logits.shape == (1, V)
    assert profile.distances == ()
    assert np.array_equal(pd, np.zeros((1, 1)))


def test_forward_input_validation():
    state = desk_state()
    with pytest.raises(ValueError):
        encoder_forward([], state)
    with pytest.raises(ValueError):
        encoder_forward([V + 5], state)
    with pytest.raises(ValueError):
        encoder_forward([-1], state)
    with pytest.raises(ValueError):
        encoder_forward(list(range(1, 2)) * 200, state)  # > max_seq_len


def test_parser_pos_m_equals_L_matches_vanilla_bitwise():
    for m in (0, 1, 2):
        state = desk_state(parser_pos=m)
        ids = [2, 7, 1, 18]
        logits, _, _ = encoder_forward(ids, state)
        vlogits = vanilla_forward(ids, state)
        if m == state.config.n_layers:
            assert np.array_equal(logits, vlogits)
        else:
            assert not np.array_equal(logits, vlogits)


def test_parser_forward_standalone():
    state = desk_state()
    emb = np.random.default_rng(3).normal(size=(6, state.config.d_model))
    profile = parser_forward(emb, state)
    assert len(profile.distances) == 5 and len(profile.heights) == 6
    with pytest.raises(ValueError):
        parser_forward(np.zeros(4), state)


def test_learned_positions_used():
    state = desk_state(pos_encoding="learned")
    assert "pos" in state.params
    base, _, _ = encoder_forward([1, 2, 3], state)
    state.params["pos"][1] += 0.5
    bumped, _, _ = encoder_forward([1, 2, 3], state)
    assert not np.array_equal(base, bumped)


def test_dropout_only_with_rng():
    state = desk_state()
    cfg = ModelConfig.desk(vocab_size=V, dropout=0.5)
    state = ModelState(cfg, state.params)
    ids = [5, 6, 7]
    a = vanilla_forward_t(ids, _tensors(state), cfg).data
    b = vanilla_forward_t(ids, _tensors(state), cfg).data
    assert np.array_equal(a, b)  # no rng -> deterministic eval mode
    rng = np.random.default_rng(0)
    c = vanilla_forward_t(ids, _tensors(state), cfg, rng=rng).data
    assert not np.array_equal(a, c)


# ----------------------------------------------- dependency-gated attention

def loop_attention_oracle(Q, K, V_, pd, w_parent, w_child):
    h, n, dk = Q.shape
    out = np.zeros_like(Q)
    for hh in range(h):
        pp = math.exp(w_parent[hh]) / (math.exp(w_parent[hh]) + math.exp(w_child[hh]))
        pc = 1.0 - pp
        for i in range(n):
            for j in range(n):
                score = float(Q[hh, i] @ K[hh, j]) / math.sqrt(dk)
                gate = 1.0 / (1.0 + math.exp(-score))
                p = pp * pd[i, j] + pc * pd[j, i]
                out[hh, i] += p * gate * V_[hh, j]
    return out


def attention_case(nprng, h=2, n=5, dk=4):
    Q = nprng.normal(size=(h, n, dk))
    K = nprng.normal(size=(h, n, dk))
    V_ = nprng.normal(size=(h, n, dk))
    pd = nprng.uniform(0, 0.3, size=(n, n))
    np.fill_diagonal(pd, 0.0)
    return Q, K, V_, pd


def test_attention_zero_pd_zero_output(nprng):
    Q, K, V_, _ = attention_case(nprng)
    out = dep_constrained_attention(Q, K, V_, np.zeros((5, 5)),
                                    np.zeros(2), np.zeros(2))
    assert np.array_equal(out, np.zeros_like(out))


def test_attention_symmetric_weights_half():
    w = np.array([0.7, -1.2])
    pp = np.exp(w) / (np.exp(w) + np.exp(w))
    assert np.all(pp == 0.5)  # x/(2x) is exactly 0.5 in IEEE


def test_attention_matches_loop_oracle(nprng):
    Q, K, V_, pd = attention_case(nprng)
    wp, wc = nprng.normal(size=2), nprng.normal(size=2)
    got = dep_constrained_attention(Q, K, V_, pd, wp, wc)
    want = loop_attention_oracle(Q, K, V_, pd, wp, wc)
    assert np.abs(got - want).max() < 1e-10


def test_attention_shape_checks(nprng):
    Q, K, V_, pd = attention_case(nprng)
    with pytest.raises(ValueError):
        dep_constrained_attention(Q, K[:1], V_, pd, np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        dep_constrained_attention(Q, K, V_, pd[:3, :3], np.zeros(2), np.zeros(2))


# ---------------------------------------------------------------- gradients

def model_loss(state: ModelState, ids, masked: MaskedSentence, arch: str):
    t = _tensors(state)
    if arch == "vanilla":
        logits = vanilla_forward_t(ids, t, state.config)
    else:
        logits, _, _, _ = encoder_forward_t(ids, t, state.config)
    return mlm_loss_t(logits, masked), t


@pytest.mark.parametrize("arch,parser_pos", [
    ("structformer", 0), ("structformer", 1), ("vanilla", 0),
])
def test_mlm_gradients_match_finite_differences(arch, parser_pos):
    state = desk_state(parser_pos=parser_pos)
    ids = np.array([3, 11, 7, 19, 2, 14])
    masked = MaskedSentence(
        input_ids=np.array([3, 11, 2, 19, 2, 14]),
        target_ids=np.array([7, 2]), positions=np.array([2, 4]))
    loss, t = model_loss(state, masked.input_ids, masked, arch)
    loss.backward(np.ones(()))
    h = 1e-4
    rng = np.random.default_rng(5)
    for name, tensor in t.items():
        grad = tensor.grad
        if grad is None:
            grad = np.zeros_like(state.params[name])
        arr = state.params[name]
        flat_idx = (rng.choice(arr.size, size=min(3, arr.size), replace=False)
                    if arr.size else [])
        for fi in flat_idx:
            idx = np.unravel_index(fi, arr.shape) if arr.shape else ()
            orig = arr[idx]
            arr[idx] = orig + h
            fp = float(model_loss(state, masked.input_ids, masked, arch)[0].data)
            arr[idx] = orig - h
            fm = float(model_loss(state, masked.input_ids, masked, arch)[0].data)
            arr[idx] = orig
            fd = (fp - fm) / (2 * h)
            err = abs(fd - grad[idx]) / max(1.0, abs(fd), abs(grad[idx]))
            assert err <= 1e-4, (name, idx, fd, grad[idx])


# ------------------------------------------------------------- persistence

def test_checkpoint_round_trip(tmp_path):
    state = desk_state(parser_pos=1)
    path = str(tmp_path / "ckpt.npz")
    state.save(path)
    back = ModelState.load(path)
    assert back.config == state.config
    assert set(back.params) == set(state.params)
    ids = [4, 8, 15, 16]
    a, _, apd = encoder_forward(ids, state)
    b, _, bpd = encoder_forward(ids, back)
    assert np.array_equal(a, b)
    assert np.array_equal(apd, bpd)


def test_state_copy_is_deep():
    state = desk_state()
    dup = state.copy()
    dup.params["out.b"][0] += 1.0
    assert state.params["out.b"][0] == 0.0

import numpy as np
import pytest

from stvsa.autodiff import Tensor, finite_diff_check, ops
from stvsa.models import (Classifier, EncoderLayer, ModelConfig, MultiHeadSelfAttention,
                          QSTAformer, TransformerClassifier, baseline, build_model, frozen,
                          load_checkpoint, positional_encoding, quantum_expectations,
                          read_meta, save_checkpoint, time_signal)
from stvsa.quantum import CircuitSpec, run_circuit

TINY = dict(seq_len=3, feature_dim=3, d_model=8, n_heads=2, d_ff=8, n_encoder_layers=1,
            n_qubits=2, n_qlayers=1)


def tiny(variant="qstaformer", seed=0, **kw):
    return build_model(ModelConfig(**{**TINY, "variant": variant, **kw}), seed)


def batch(b=4, L=3, F=3, seed=0):
    return np.random.default_rng(seed).normal(size=(b, L, F))


# -- embedding / positional encoding -----------------------------------------------

def test_pe_row_zero_and_range():
    pe = positional_encoding(10, 8)
    np.testing.assert_allclose(pe[0], [0, 1] * 4)
    assert np.all(np.abs(pe) <= 1)
    np.testing.assert_array_equal(pe, positional_encoding(10, 8))


def test_embed_zero_input_zero_weights_is_pe():
    m = tiny()
    emb = m.embedding
    emb.W_e.data[:] = 0
    out = emb(Tensor(np.zeros((1, 3, 3))))
    np.testing.assert_allclose(out.data[0], positional_encoding(3, 8), atol=1e-12)


def test_embed_shape_and_mismatch():
    m = tiny()
    assert m.embedding(Tensor(batch(2))).shape == (2, 3, 8)
    with pytest.raises(ValueError):
        m.embedding(Tensor(np.zeros((1, 3, 4))))


def test_time_signal():
    t = time_signal(10)
    assert t[0] == pytest.approx(-np.pi / 2) and t[-1] == pytest.approx(np.pi / 2)
    assert np.all(np.diff(t) > 0)


# -- attention / encoder layers -------------------------------------------------------

def test_attention_single_position():
    att = MultiHeadSelfAttention(8, 2, np.random.default_rng(0))
    att(Tensor(np.random.default_rng(1).normal(size=(2, 1, 8))))
    np.testing.assert_array_equal(att.last_weights, np.ones((2, 2, 1, 1)))


def test_attention_rows_stochastic():
    att = MultiHeadSelfAttention(8, 4, np.random.default_rng(0))
    att(Tensor(np.random.default_rng(2).normal(size=(3, 6, 8)) * 5))
    w = att.last_weights
    assert np.all(w >= 0)
    np.testing.assert_allclose(w.sum(-1), 1.0, atol=1e-12)


def test_zero_value_projection_reduces_to_ln_plus_ffn():
    layer = EncoderLayer(8, 2, 16, np.random.default_rng(0))
    layer.attn.W_v.data[:] = 0
    layer.attn.b_v.data[:] = 0
    layer.attn.b_o.data[:] = 0
    h = Tensor(np.random.default_rng(3).normal(size=(2, 4, 8)))
    z = layer.norm1(h)
    want = layer.norm2(z + layer.ffn(z))
    np.testing.assert_allclose(layer(h).data, want.data, atol=1e-12)


def test_heads_must_divide():
    with pytest.raises(ValueError):
        ModelConfig(d_model=10, n_heads=4)


# -- quantum layer ----------------------------------------------------------------------

def test_quantum_zero_projection_gives_time_angle_circuit():
    m = tiny(seq_len=3)
    q = m.quantum
    q.W_q.data[:] = 0
    h = Tensor(batch(2, F=8))
    h_attn = q.norm1(h + q.attn(h))
    angles = q.circuit_angles(h_attn).data
    t = time_signal(3)
    np.testing.assert_allclose(angles, np.broadcast_to(t[None, :, None], angles.shape), atol=1e-15)
    q(h)
    for i in range(3):
        want = run_circuit(q.spec, q.theta.data, np.full(2, t[i]))
        np.testing.assert_allclose(q.last_expectations[0, i], want, atol=1e-12)


def test_zero_angles_give_all_ones():
    spec = CircuitSpec(2, 1)
    out = quantum_expectations(Tensor(np.zeros((2, 3, 2))), Tensor(np.zeros(spec.param_shape)), spec)
    np.testing.assert_array_equal(out.data, np.ones((2, 3, 2)))


def test_expectations_bounded():
    m = tiny(n_qubits=3, n_qlayers=2)
    m.logits(batch(5) * 10)
    assert np.all(np.abs(m.quantum.last_expectations) <= 1 + 1e-12)


def _copy_into_transformer(q: QSTAformer) -> TransformerClassifier:
    c = q.config
    acts = ["relu"] * (c.n_encoder_layers - 1) + ["gelu"]
    tf = TransformerClassifier(ModelConfig(**{**c.to_dict(), "variant": "transformer"}),
                               np.random.default_rng(99), activations=acts)
    state = {}
    for name, p in q.named_parameters():
        if name.startswith("quantum."):
            if name.split(".")[1] in ("W_q", "theta", "W_o"):
                continue
            name = f"layers.{c.n_encoder_layers - 1}." + name[len("quantum."):]
        state[name] = p.data
    tf.load_state_dict(state)
    return tf


@pytest.mark.parametrize("n_layers", [1, 2])
def test_zero_output_projection_matches_classical(n_layers):
    q = tiny(seed=3, n_encoder_layers=n_layers)
    q.quantum.W_o.data[:] = 0
    tf = _copy_into_transformer(q)
    x = batch(4, seed=5)
    np.testing.assert_allclose(q.logits(x).data, tf.logits(x).data, atol=1e-12)


@pytest.mark.parametrize("mode", ["adjoint", "shift"])
def test_full_model_gradcheck(mode):
    m = tiny(seed=1, quantum_gradient=mode)
    x = batch(2, seed=7)
    y = np.array([0, 1])
    params = m.parameters()

    def loss():
        return ops.cross_entropy(m.logits(x), y)

    assert finite_diff_check(loss, params, h=1e-6) <= 1e-4


def test_adjoint_and_shift_gradients_agree():
    grads = {}
    for mode in ("adjoint", "shift"):
        m = tiny(seed=2, n_qubits=3, n_qlayers=2, quantum_gradient=mode)
        ops.cross_entropy(m.logits(batch(3, seed=8)), np.array([0, 1, 1])).backward()
        grads[mode] = {k: p.grad.copy() for k, p in m.named_parameters()}
    for k in grads["adjoint"]:
        np.testing.assert_allclose(grads["adjoint"][k], grads["shift"][k], atol=1e-12, err_msg=k)


# -- head / forward ----------------------------------------------------------------------

def test_classifier_examples():
    head = Classifier(8, 2, np.random.default_rng(0))
    head.W_cls.data[:] = 0
    h = Tensor(np.random.default_rng(1).normal(size=(3, 4, 8)))
    np.testing.assert_allclose(ops.softmax(head(h)).data, 0.5)
    head.b_cls.data[:] = [10, -10]
    p = ops.softmax(head(h)).data
    assert np.all(p[:, 0] > 0.999999)


@pytest.mark.parametrize("variant", ["qstaformer", "transformer", "lstm"])
def test_forward_shapes_batching_and_permutation(variant):
    m = tiny(variant, seed=4)
    x = batch(5, seed=9)
    probs, logits = m.forward(x)
    assert probs.shape == (5, 2)
    np.testing.assert_allclose(probs.sum(1), 1.0, atol=1e-12)
    # BLAS picks its blocking by operand shape, so batch-size changes move the last ulp
    single = np.stack([m.forward(x[i:i + 1])[1][0] for i in range(5)])
    np.testing.assert_allclose(single, logits, rtol=0, atol=1e-14)
    np.testing.assert_array_equal(m.forward(x[:1])[1], m.forward(x[:1])[1])
    perm = np.array([3, 0, 4, 1, 2])
    np.testing.assert_allclose(m.forward(x[perm])[1], logits[perm], rtol=0, atol=1e-14)


def test_argmax_invariant_under_logit_shift():
    m = tiny(seed=5)
    lg = m.logits(batch(6)).data
    np.testing.assert_array_equal(lg.argmax(1), (lg + 7.3).argmax(1))


def test_lstm_zero_weights_constant_state():
    m = tiny("lstm")
    for p in m.parameters():
        p.data[:] = 0
    lg = m.logits(batch(4) * 3).data
    np.testing.assert_array_equal(lg, np.zeros_like(lg))


def test_single_layer_transformer_zero_attention_is_per_position():
    m = tiny("transformer", seed=6)
    att = m.layers[0].attn
    for p in (att.W_v, att.b_v, att.b_o):
        p.data[:] = 0
    x = batch(2)
    x2 = x.copy()
    x2[:, 0] += 5.0   # earlier positions cannot influence the last one
    np.testing.assert_allclose(m.logits(x).data, m.logits(x2).data, atol=1e-12)


def test_baseline_variants():
    assert isinstance(baseline("transformer", ModelConfig(**TINY)), TransformerClassifier)
    with pytest.raises(ValueError):
        baseline("qlstm")
    with pytest.raises(ValueError):
        ModelConfig(variant="gru")


def test_frozen_restores_flags():
    m = tiny()
    with frozen(m):
        assert not any(p.requires_grad for p in m.parameters())
    assert all(p.requires_grad for p in m.parameters())


def test_fit_scaler_standardises():
    m = tiny()
    x = batch(50) * 4 + 10
    m.fit_scaler(x)
    np.testing.assert_allclose(m.embed.input_mean, x.reshape(-1, 3).mean(0))


# -- checkpoints ---------------------------------------------------------------------------

@pytest.mark.parametrize("variant", ["qstaformer", "transformer", "lstm"])
def test_checkpoint_roundtrip(tmp_path, variant):
    m = tiny(variant, seed=11)
    m.fit_scaler(batch(20) * 3 + 1)
    path = save_checkpoint(m, tmp_path / "m.npz", extra={"note": "x"})
    back = load_checkpoint(path)
    for (k, a), (k2, b) in zip(m.named_parameters(), back.named_parameters()):
        assert k == k2
        np.testing.assert_array_equal(a.data, b.data)
    x = batch(3)
    np.testing.assert_array_equal(m.forward(x)[1], back.forward(x)[1])
    meta = read_meta(path)
    assert meta["format_version"] == 1 and meta["extra"] == {"note": "x"}


def test_checkpoint_rejects_non_checkpoint(tmp_path):
    p = tmp_path / "x.npz"
    np.savez(p, a=np.zeros(2))
    with pytest.raises(ValueError):
        load_checkpoint(p)

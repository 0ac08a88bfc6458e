import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timegci import nd
from timegci.nd import Tape, Tensor, backward


def param(a, name=None):
    return Tensor(np.asarray(a, dtype=float), requires_grad=True, name=name)


def test_sum_gradient_is_ones():
    p = param(np.arange(5.0))
    with Tape() as tape:
        loss = p.sum()
    np.testing.assert_array_equal(backward(tape, loss)[p], np.ones(5))


def test_quadratic_gradient():
    p = param([1.0, 2.0])
    with Tape() as tape:
        loss = (p * p).sum()
    np.testing.assert_allclose(backward(tape, loss)[p], [2.0, 4.0])


def test_non_scalar_loss_rejected():
    p = param([1.0, 2.0])
    with Tape() as tape:
        out = p * 2.0
    with pytest.raises(ValueError):
        backward(tape, out)


@pytest.mark.filterwarnings("ignore:invalid value encountered in log")
def test_nan_loss_rejected():
    p = param([-1.0])
    with Tape() as tape:
        loss = nd.log(p).sum()
    with pytest.raises(nd.NonFiniteError):
        backward(tape, loss)


def test_unused_parameter_gets_zero_gradient():
    p, q = param([1.0]), param([[1.0, 2.0]])
    with Tape() as tape:
        a = p * 3.0
        _ = q * 2.0  # recorded, but not part of the loss
        loss = a.sum()
    g = backward(tape, loss)
    assert g[q].shape == q.shape and not g[q].any()


def test_no_tape_means_no_recording():
    p = param([1.0])
    out = p * 2.0
    assert not out.requires_grad
    with Tape() as tape:
        with nd.no_grad():
            out = p * 2.0
    assert len(tape) == 0 and not out.requires_grad


def test_elu_definition():
    out = nd.elu(Tensor([-1.0, 0.0, 2.0])).data
    np.testing.assert_allclose(out, [np.exp(-1) - 1, 0.0, 2.0])
    assert out[0] == pytest.approx(-0.6321, abs=1e-4)


@pytest.mark.parametrize("op", [
    nd.exp, nd.tanh, nd.sigmoid, nd.softplus, nd.log_sigmoid, nd.elu, nd.square,
    lambda x: nd.log(nd.exp(x) + 1.0),
    lambda x: nd.clip(x, -0.5, 0.5),
    lambda x: x / (nd.exp(x) + 2.0),
    lambda x: nd.concat([x, x * 2.0], axis=-1)[..., 1:4],
    lambda x: nd.stack([x, -x], axis=1).reshape(-1),
    lambda x: nd.mean(x, axis=0),
])
def test_elementwise_gradients(op):
    rng = np.random.default_rng(0)
    x = param(rng.normal(size=(3, 4)) * 1.5, "x")
    w = rng.normal(size=op(Tensor(x.data)).shape)
    err = nd.check_gradients(lambda: (op(x) * w).sum(), [x])
    assert max(err.values()) <= 1e-4


def test_matmul_and_affine_gradients():
    rng = np.random.default_rng(1)
    x = param(rng.normal(size=(2, 3, 4)), "x")
    w = param(rng.normal(size=(4, 5)), "w")
    b = param(rng.normal(size=5), "b")
    err = nd.check_gradients(lambda: nd.tanh(nd.affine(x, w, b)).sum() + (x @ w).sum(), [x, w, b])
    assert max(err.values()) <= 1e-4


def test_gather_gradient():
    rng = np.random.default_rng(2)
    x = param(rng.normal(size=(4, 6, 3)), "x")
    idx = (np.arange(4), np.array([0, 5, 2, 2]))
    err = nd.check_gradients(lambda: nd.square(x[idx]).sum(), [x])
    assert max(err.values()) <= 1e-4


# ---------------------------------------------------------------- LSTM

def test_lstm_zero_weights_gives_zero_hidden():
    p = nd.LSTMParams(Tensor(np.zeros((3, 8 * 4))), Tensor(np.zeros((8, 32))), Tensor(np.zeros(32)))
    h, c = nd.lstm_step(p, np.array([0.3, -1.0, 2.0]), (np.zeros(8), np.zeros(8)))
    np.testing.assert_array_equal(h.data, np.zeros(8))
    np.testing.assert_array_equal(c.data, np.zeros(8))


def test_lstm_step_deterministic_and_shape_checked():
    rng = np.random.default_rng(3)
    p = nd.LSTMParams.init(rng, 3, 32)
    x, s = rng.normal(size=3), (rng.normal(size=32), rng.normal(size=32))
    a = nd.lstm_step(p, x, s)
    b = nd.lstm_step(p, x, s)
    np.testing.assert_array_equal(a[0].data, b[0].data)
    assert a[0].shape == (32,) and np.isfinite(a[1].data).all()
    with pytest.raises(ValueError):
        nd.lstm_step(p, np.zeros(4), s)


def test_lstm_forget_bias_init():
    p = nd.LSTMParams.init(np.random.default_rng(0), 2, 4)
    np.testing.assert_array_equal(p.b.data, [0] * 4 + [1] * 4 + [0] * 8)
    assert np.abs(p.w_x.data).max() <= 1 / np.sqrt(6)


def test_lstm_step_gradient():
    rng = np.random.default_rng(4)
    p = nd.LSTMParams.init(rng, 3, 5)
    x = param(rng.normal(size=(2, 3)), "x")
    h0 = param(rng.normal(size=(2, 5)), "h0")
    c0 = param(rng.normal(size=(2, 5)), "c0")

    def loss():
        h, c = nd.lstm_step(p, x, (h0, c0))
        h2, c2 = nd.lstm_step(p, x * 0.5, (h, c))
        return h2.sum() + (c2 * c2).sum() * 0.1

    err = nd.check_gradients(loss, p.tensors() + [x, h0, c0])
    assert max(err.values()) <= 1e-4


def test_lstm_sequence_matches_stepwise():
    rng = np.random.default_rng(5)
    p = nd.LSTMParams.init(rng, 3, 32)
    xs = rng.normal(size=(4, 7, 3))
    hs, cs = nd.lstm_sequence(p, xs)
    h, c = np.zeros((4, 32)), np.zeros((4, 32))
    for t in range(7):
        for b in range(4):  # unbatched path, one sequence at a time
            hb, cb = nd.lstm_step(p, xs[b, t], (h[b], c[b]))
            h[b], c[b] = hb.data, cb.data
        np.testing.assert_allclose(hs.data[:, t + 1], h, atol=1e-12, rtol=0)
        np.testing.assert_allclose(cs[:, t + 1], c, atol=1e-12, rtol=0)


def test_lstm_sequence_gradient_with_mlp_head():
    rng = np.random.default_rng(6)
    p = nd.LSTMParams.init(rng, 2, 6)
    head = nd.MLPParams.init(rng, 6 + 2, 1, hidden=(5, 5))
    xs = param(rng.normal(size=(3, 4, 2)), "xs")
    w = rng.normal(size=(3, 4))

    def loss():
        hs, _ = nd.lstm_sequence(p, xs)
        feats = nd.concat([hs[:, :4], xs], axis=-1)
        return (nd.mlp_head(head, feats)[..., 0] * w).sum()

    err = nd.check_gradients(loss, p.tensors() + head.tensors() + [xs])
    assert max(err.values()) <= 1e-4


# ---------------------------------------------------------------- MLP

def test_mlp_zero_weights_give_bias():
    rng = np.random.default_rng(7)
    head = nd.MLPParams.init(rng, 4, 3)
    for w in head.weights:
        w.data[:] = 0.0
    head.biases[-1].data[:] = [1.0, -2.0, 0.5]
    out = nd.mlp_head(head, rng.normal(size=(6, 4)))
    np.testing.assert_array_equal(out.data, np.tile([1.0, -2.0, 0.5], (6, 1)))


def test_mlp_architecture_and_gradient():
    rng = np.random.default_rng(8)
    head = nd.MLPParams.init(rng, 4, 3)
    assert [w.shape for w in head.weights] == [(4, 32), (32, 32), (32, 3)]
    x = rng.normal(size=(5, 4))
    err = nd.check_gradients(lambda: nd.square(nd.mlp_head(head, x)).sum(), head.tensors())
    assert max(err.values()) <= 1e-4
    with pytest.raises(ValueError):
        nd.mlp_head(head, np.zeros(5))


# ---------------------------------------------------------------- Adam / Polyak

def test_adam_zero_gradient_keeps_parameters_and_decays_moments():
    p = param([1.0, -2.0])
    opt = nd.Adam([p], lr=0.1)
    opt.step([np.array([1.0, 1.0])])
    before = p.data.copy()
    m_before = opt.m[0].copy()
    opt.step([np.zeros(2)])
    np.testing.assert_allclose(opt.m[0], 0.9 * m_before)
    # bias-corrected moment is nonzero so the parameter still moves; with fresh state it must not
    fresh = param([1.0, -2.0])
    nd.Adam([fresh], lr=0.1).step([np.zeros(2)])
    np.testing.assert_array_equal(fresh.data, [1.0, -2.0])
    assert opt.step_count == 2 and not np.array_equal(before, p.data)


def test_adam_first_step_magnitude_is_lr():
    p = param([0.0, 0.0])
    nd.Adam([p], lr=0.01).step([np.array([3.0, -0.2])])
    np.testing.assert_allclose(p.data, [-0.01, 0.01], rtol=1e-6)


def test_adam_converges_on_scalar_quadratic():
    p = param([0.0])
    opt = nd.Adam([p], lr=0.1)
    for _ in range(200):
        with Tape() as tape:
            loss = nd.square(p - 3.0).sum()
        opt.step(backward(tape, loss))
    assert abs(p.data[0] - 3.0) < 0.05


def test_adam_rejects_nan_gradient():
    p = param([0.0])
    with pytest.raises(nd.NonFiniteError):
        nd.Adam([p]).step([np.array([np.nan])])


def test_adam_scale_invariance():
    rng = np.random.default_rng(9)
    g = rng.normal(size=10)
    a, b = param(np.zeros(10)), param(np.zeros(10))
    oa, ob = nd.Adam([a], lr=1e-3, eps=1e-12), nd.Adam([b], lr=1e-3, eps=1e-12)
    for k in range(5):
        gk = g * (k + 1) + rng.normal(size=10)
        oa.step([gk])
        ob.step([10.0 * gk])
    cos = a.data @ b.data / (np.linalg.norm(a.data) * np.linalg.norm(b.data))
    assert cos >= 0.9999


def test_polyak_update():
    t, o = param([0.0, 0.0]), param([1.0, 1.0])
    nd.polyak_update([t], [o], 0.005)
    np.testing.assert_allclose(t.data, [0.005, 0.005])
    nd.polyak_update([t], [o], 1.0)
    np.testing.assert_array_equal(t.data, o.data)
    same = param([2.0, 3.0])
    nd.polyak_update([same], [param([2.0, 3.0])], 0.3)
    np.testing.assert_allclose(same.data, [2.0, 3.0])
    with pytest.raises(ValueError):
        nd.polyak_update([t], [o], 0.0)
    with pytest.raises(ValueError):
        nd.polyak_update([t], [param([1.0])], 0.5)


def test_training_is_bit_deterministic():
    def run():
        rng = np.random.default_rng(11)
        p = nd.LSTMParams.init(rng, 2, 4)
        head = nd.MLPParams.init(rng, 4, 1, hidden=(4,))
        params = p.tensors() + head.tensors()
        opt = nd.Adam(params, lr=1e-2)
        xs = rng.normal(size=(3, 5, 2))
        for _ in range(20):
            with Tape() as tape:
                hs, _ = nd.lstm_sequence(p, xs)
                loss = nd.square(nd.mlp_head(head, hs) - 0.3).mean()
            opt.step(backward(tape, loss))
        return np.concatenate([q.data.ravel() for q in params])

    np.testing.assert_array_equal(run(), run())


@settings(max_examples=25, deadline=None)
@given(B=st.integers(1, 3), T=st.integers(1, 4), D=st.integers(1, 3), H=st.integers(1, 4), seed=st.integers(0, 10_000))
def test_lstm_sequence_gradient_random_shapes(B, T, D, H, seed):
    rng = np.random.default_rng(seed)
    p = nd.LSTMParams.init(rng, D, H)
    xs = rng.normal(size=(B, T, D))
    w = rng.normal(size=(B, T + 1, H))
    err = nd.check_gradients(lambda: (nd.lstm_sequence(p, xs)[0] * w).sum(), p.tensors())
    assert max(err.values()) <= 1e-4


def test_lstm_backends_agree():
    rng = np.random.default_rng(21)
    p = nd.LSTMParams.init(rng, 3, 16)
    xs = Tensor(rng.normal(size=(5, 9, 3)), requires_grad=True)
    h0, c0 = rng.normal(size=(5, 16)), rng.normal(size=(5, 16))
    w = rng.normal(size=(5, 10, 16))
    out = {}
    for backend in ("numpy", "jit"):
        with Tape() as tape:
            hs, cs = nd.lstm_sequence(p, xs, h0, c0, backend=backend)
            loss = (hs * w).sum()
        out[backend] = (hs.data, cs, backward(tape, loss, wrt=p.tensors() + [xs]))
    np.testing.assert_allclose(out["jit"][0], out["numpy"][0], atol=1e-13)
    np.testing.assert_allclose(out["jit"][1], out["numpy"][1], atol=1e-13)
    for k, g in out["numpy"][2].items():
        np.testing.assert_allclose(out["jit"][2][k], g, atol=1e-12)

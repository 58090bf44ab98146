import numpy as np
import pytest

from zerocs import autodiff as ad


def numeric_grad(f, x, h=1e-6):
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        old = x[idx]
        x[idx] = old + h
        up = f(x)
        x[idx] = old - h
        down = f(x)
        x[idx] = old
        g[idx] = (up - down) / (2 * h)
    return g


OPS = {
    "softmax": lambda t: (ad.softmax(t, axis=-1) * np.arange(12.0).reshape(3, 4)).sum(),
    "gelu": lambda t: ad.gelu(t).sum(),
    "sigmoid": lambda t: (ad.sigmoid(t) * t).sum(),
    "relu": lambda t: (ad.relu(t + 0.05) * t).sum(),
    "matmul_bcast": lambda t: (t.reshape(1, 3, 4) @ np.ones((2, 4, 5))).sum(),
    "getitem": lambda t: (t[np.array([0, 2, 2])] * t[np.array([1, 1, 0])]).sum(),
    "concat": lambda t: (ad.concat([t, t * t], axis=1) * np.arange(24.0).reshape(3, 8)).sum(),
    "transpose": lambda t: (t.transpose(1, 0) @ t).sum(),
}


@pytest.mark.parametrize("name", sorted(OPS))
def test_op_gradients(name):
    rng = np.random.default_rng(1)
    x = rng.normal(size=(3, 4))
    f = OPS[name]
    t = ad.Tensor(x.copy(), requires_grad=True)
    f(t).backward()
    expected = numeric_grad(lambda a: float(f(ad.Tensor(a)).data), x.copy())
    np.testing.assert_allclose(t.grad, expected, rtol=1e-6, atol=1e-8)


def test_layer_norm_gradients():
    rng = np.random.default_rng(2)
    x, gam, bet = rng.normal(size=(2, 3, 5)), rng.normal(size=5), rng.normal(size=5)
    w = rng.normal(size=(2, 3, 5))

    def f(a, b, c):
        return float((ad.layer_norm(ad.Tensor(a), ad.Tensor(b), ad.Tensor(c)) * w).sum().data)

    tx, tg, tb = (ad.Tensor(v.copy(), requires_grad=True) for v in (x, gam, bet))
    (ad.layer_norm(tx, tg, tb) * w).sum().backward()
    np.testing.assert_allclose(tx.grad, numeric_grad(lambda a: f(a, gam, bet), x.copy()), rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(tg.grad, numeric_grad(lambda a: f(x, a, bet), gam.copy()), rtol=1e-6, atol=1e-8)
    np.testing.assert_allclose(tb.grad, numeric_grad(lambda a: f(x, gam, a), bet.copy()), rtol=1e-6, atol=1e-8)


def test_gelu_tanh_constants():
    x = np.array([-2.0, 0.0, 1.5])
    expected = 0.5 * x * (1 + np.tanh(np.sqrt(2 / np.pi) * (x + 0.044715 * x**3)))
    np.testing.assert_allclose(ad.gelu(ad.Tensor(x)).data, expected)


def test_shared_node_accumulates():
    t = ad.Tensor(np.array([3.0]), requires_grad=True)
    y = t * t + t
    y.sum().backward()
    assert t.grad[0] == pytest.approx(7.0)


def test_constants_get_no_grad():
    c = ad.Tensor(np.ones(3))
    t = ad.Tensor(np.ones(3), requires_grad=True)
    (c * t).sum().backward()
    assert c.grad is None

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sagin_slicing.neural import (Adam, Mlp, NumericalError, dumps_mlp, loads_mlp, sgd_step,
                                  sigmoid, soft_update)

import oracles


def _net(dims, seed=0, output="sigmoid"):
    return Mlp.init(dims, np.random.default_rng(seed), output)


def test_zero_network_outputs_half():
    net = Mlp.zeros([4, 5, 3])
    assert np.all(net(np.arange(4.0)) == 0.5)


def test_single_unit():
    net = Mlp([np.array([[0.0]])], [np.array([0.0])])
    assert net(np.array([3.0]))[0] == 0.5
    net = Mlp([np.array([[0.7]])], [np.array([-0.2])])
    assert net(np.array([3.0]))[0] == pytest.approx(1 / (1 + np.exp(-(2.1 - 0.2))), abs=1e-15)


def test_forward_vs_straight_line():
    net = _net([6, 10, 7, 3], 1)
    x = np.random.default_rng(2).normal(size=(5, 6))
    a = x
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        a = np.maximum(a @ W + b, 0)
    y = 1 / (1 + np.exp(-(a @ net.weights[-1] + net.biases[-1])))
    assert np.max(np.abs(net(x) - y)) < 1e-12


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        _net([3, 2])(np.zeros(4))


def test_zero_output_gradient():
    net = _net([3, 4, 2])
    _, cache = net.forward(np.ones(3))
    grads, dx = net.backward(cache, np.zeros(2))
    assert all(np.all(g == 0) for g in grads) and np.all(dx == 0)


def test_one_layer_analytic_derivative():
    net = Mlp([np.array([[0.3]])], [np.array([0.1])])
    x = 2.0
    _, cache = net.forward(np.array([x]))
    grads, dx = net.backward(cache, np.array([1.0]))
    s = 1 / (1 + np.exp(-(0.3 * x + 0.1)))
    assert grads[0][0, 0] == pytest.approx(s * (1 - s) * x, abs=1e-12)
    assert grads[1][0] == pytest.approx(s * (1 - s), abs=1e-12)
    assert dx[0] == pytest.approx(s * (1 - s) * 0.3, abs=1e-12)


@pytest.mark.parametrize("output", ["sigmoid", "linear"])
def test_backward_vs_finite_differences(output):
    rng = np.random.default_rng(3)
    net = _net([5, 6, 4, 3], 4, output)
    x = rng.normal(size=(4, 5))
    w = rng.normal(size=(4, 3))
    _, cache = net.forward(x)
    grads, dx = net.backward(cache, w)
    fd = oracles.finite_difference(lambda: float(np.sum(w * net(x))), net.params)
    for g, f in zip(grads, fd):
        assert oracles.rel_error(g, f) < 1e-4
    fdx = oracles.finite_difference(lambda: float(np.sum(w * net(x))), [x])[0]
    assert oracles.rel_error(dx, fdx) < 1e-4


def test_sgd_step_examples():
    net = Mlp([np.array([[1.0]])], [np.array([0.0])], learning_rate=0.1)
    sgd_step(net, [np.array([[2.0]]), np.array([0.0])], "descend")
    assert net.weights[0][0, 0] == pytest.approx(0.8)
    sgd_step(net, [np.zeros((1, 1)), np.zeros(1)], "ascend")
    assert net.weights[0][0, 0] == pytest.approx(0.8)
    with pytest.raises(NumericalError):
        sgd_step(net, [np.array([[np.nan]]), np.zeros(1)])


def test_descent_on_convex_quadratic_is_monotone():
    rng = np.random.default_rng(5)
    net = Mlp([rng.normal(size=(3, 1))], [np.zeros(1)], "linear", 0.01)
    x = rng.normal(size=(20, 3))
    y = x @ np.array([1.0, -2.0, 0.5])
    losses = []
    for _ in range(100):
        out, cache = net.forward(x)
        err = out[:, 0] - y
        losses.append(np.mean(err ** 2))
        grads, _ = net.backward(cache, 2 * err[:, None] / len(err))
        sgd_step(net, grads)
    assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))


def test_adam_moves_downhill():
    net = Mlp([np.array([[1.0]])], [np.array([0.0])], "linear", 0.1)
    opt = Adam()
    for _ in range(50):
        opt.step(net, [2 * net.weights[0], np.zeros(1)])
    assert abs(net.weights[0][0, 0]) < 1.0


def test_soft_update_examples():
    t, o = Mlp.zeros([1, 1]), Mlp([np.ones((1, 1))], [np.ones(1)])
    soft_update(t, o, 0.001)
    assert t.weights[0][0, 0] == pytest.approx(0.001)
    soft_update(t, o, 1.0)
    assert t.weights[0][0, 0] == 1.0
    with pytest.raises(ValueError):
        soft_update(Mlp.zeros([2, 1]), o, 0.5)


def test_soft_update_geometric_convergence():
    t, o = Mlp.zeros([1, 1]), Mlp([np.ones((1, 1))], [np.ones(1)])
    for n in range(1, 30):
        soft_update(t, o, 0.1)
        assert 1 - t.weights[0][0, 0] == pytest.approx(0.9 ** n, rel=1e-12)


@given(st.floats(0, 1), st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_soft_update_stays_in_envelope(tau, seed):
    a, b = _net([3, 2], seed), _net([3, 2], seed + 1)
    lo = [np.minimum(x, y) for x, y in zip(a.params, b.params)]
    hi = [np.maximum(x, y) for x, y in zip(a.params, b.params)]
    soft_update(a, b, tau)
    for p, l, h in zip(a.params, lo, hi):
        assert np.all(p >= l - 1e-15) and np.all(p <= h + 1e-15)


def test_checkpoint_round_trip_bit_exact():
    net = _net([7, 5, 2], 9, "linear")
    back = loads_mlp(dumps_mlp(net))
    assert back.output == "linear" and back.learning_rate == net.learning_rate
    for a, b in zip(net.params, back.params):
        assert a.tobytes() == b.tobytes()


def test_checkpoint_corruption_detected():
    data = bytearray(dumps_mlp(_net([2, 2])))
    data[20] ^= 1
    with pytest.raises(ValueError, match="checksum"):
        loads_mlp(bytes(data))


def test_sigmoid_extremes():
    z = np.array([-1000.0, 0.0, 1000.0])
    assert np.array_equal(sigmoid(z), [0.0, 0.5, 1.0])

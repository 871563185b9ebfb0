import numpy as np
import pytest

from rpspectral.errors import BadArchitecture, ShapeMismatch
from rpspectral.mlp import Adam, Mlp, gradient_check, load_checkpoint, save_checkpoint


def quadratic_loss(output):
    """0.5 * sum of squares; gradient is the output itself."""
    return 0.5 * float((output**2).sum()), output


def test_init_shapes():
    net = Mlp.init([4, 8, 2], seed=0)
    assert [l.weights.shape for l in net.layers] == [(4, 8), (8, 2)]
    assert [l.biases.shape for l in net.layers] == [(8,), (2,)]
    assert net.layers[0].activation == "relu"
    assert net.layers[-1].activation == "identity"
    assert net.input_dim == 4 and net.output_dim == 2
    assert net.parameter_count() == 4 * 8 + 8 + 8 * 2 + 2


def test_forward_shapes():
    net = Mlp.init([4, 8, 2], seed=1)
    out, cache = net.forward(np.zeros((7, 4)))
    assert out.shape == (7, 2)
    assert len(cache) == 2
    with pytest.raises(ShapeMismatch):
        net.forward(np.zeros((7, 3)))
    with pytest.raises(ShapeMismatch):
        net.forward(np.zeros(4))


def test_init_rejects_bad_architectures():
    with pytest.raises(BadArchitecture):
        Mlp.init([4])
    with pytest.raises(BadArchitecture):
        Mlp.init([4, 0, 2])
    with pytest.raises(BadArchitecture):
        Mlp.init([4, 8, 2], activation="sigmoid")


def test_init_is_deterministic():
    a = Mlp.init([3, 16, 4], seed=5)
    b = Mlp.init([3, 16, 4], seed=5)
    for la, lb in zip(a.layers, b.layers):
        assert np.array_equal(la.weights, lb.weights)
    c = Mlp.init([3, 16, 4], seed=6)
    assert not np.array_equal(a.layers[0].weights, c.layers[0].weights)


@pytest.mark.parametrize("activation", ["relu", "tanh", "identity"])
def test_backprop_matches_finite_differences(activation):
    rng = np.random.default_rng(2)
    net = Mlp.init([5, 12, 8, 3], activation=activation, seed=3)
    batch = rng.normal(size=(16, 5))
    err = gradient_check(net, quadratic_loss, batch, sample_size=250, seed=0)
    assert err < 1e-4


def test_linear_net_gradient_is_exact():
    # Pure affine stack: the quadratic loss has an analytic gradient and
    # finite differences should agree to rounding.
    rng = np.random.default_rng(3)
    net = Mlp.init([4, 6, 2], activation="identity", seed=7)
    err = gradient_check(net, quadratic_loss, rng.normal(size=(10, 4)))
    assert err < 1e-8


def test_backward_input_grad():
    # The gradient with respect to the batch, checked by finite differences.
    rng = np.random.default_rng(4)
    net = Mlp.init([3, 10, 2], activation="tanh", seed=1)
    batch = rng.normal(size=(6, 3))
    out, cache = net.forward(batch)
    _, input_grad = net.backward(cache, out)
    eps = 1e-6
    for _ in range(20):
        r, c = rng.integers(6), rng.integers(3)
        bumped = batch.copy()
        bumped[r, c] += eps
        up, _ = net.forward(bumped)
        bumped[r, c] -= 2 * eps
        down, _ = net.forward(bumped)
        numeric = (quadratic_loss(up)[0] - quadratic_loss(down)[0]) / (2 * eps)
        assert abs(numeric - input_grad[r, c]) < 1e-5 * max(1.0, abs(numeric))


def test_backward_rejects_wrong_grad_shape():
    net = Mlp.init([3, 4, 2], seed=0)
    _, cache = net.forward(np.zeros((5, 3)))
    with pytest.raises(ShapeMismatch):
        net.backward(cache, np.zeros((5, 3)))


def test_adam_reduces_quadratic_loss():
    rng = np.random.default_rng(5)
    net = Mlp.init([4, 16, 2], activation="tanh", seed=2)
    batch = rng.normal(size=(32, 4))
    opt = Adam(net, learning_rate=1e-2)
    first = None
    for step in range(200):
        out, cache = net.forward(batch)
        loss, out_grad = quadratic_loss(out)
        if first is None:
            first = loss
        grads, _ = net.backward(cache, out_grad)
        opt.step(net, grads)
    final, _ = quadratic_loss(net.forward(batch)[0])
    assert opt.step_count == 200
    assert final < 0.1 * first


def test_adam_rejects_mismatched_grads():
    net = Mlp.init([3, 4, 2], seed=0)
    opt = Adam(net)
    with pytest.raises(ShapeMismatch):
        opt.step(net, [(np.zeros((3, 4)), np.zeros(4))])
    with pytest.raises(ShapeMismatch):
        opt.step(net, [(np.zeros((3, 5)), np.zeros(4)), (np.zeros((4, 2)), np.zeros(2))])


def test_copy_is_independent():
    net = Mlp.init([3, 5, 2], seed=0)
    clone = net.copy()
    clone.layers[0].weights[:] = 0.0
    assert np.any(net.layers[0].weights != 0.0)


def test_checkpoint_round_trip(tmp_path):
    net = Mlp.init([4, 9, 3], activation="tanh", seed=11)
    path = tmp_path / "net.json"
    save_checkpoint(net, path)
    loaded = load_checkpoint(path)
    assert [l.activation for l in loaded.layers] == [l.activation for l in net.layers]
    for la, lb in zip(net.layers, loaded.layers):
        assert np.array_equal(la.weights, lb.weights)  # bit-exact via repr
        assert np.array_equal(la.biases, lb.biases)
    rng = np.random.default_rng(0)
    batch = rng.normal(size=(8, 4))
    assert np.array_equal(net.forward(batch)[0], loaded.forward(batch)[0])

"""Network evaluation, derivative jets, initialization, checkpoints."""

import jax.numpy as jnp
import numpy as np
import pytest

from pinnrt import (
    NetworkParams,
    eval_jet2,
    forward,
    forward_batch,
    forward_jets,
    init_network,
    load_checkpoint,
    save_checkpoint,
)


def reference_forward(net, x):
    """Deliberately separate evaluation path: per-point python loop."""
    h = np.asarray(x, dtype=np.float64)
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        h = np.tanh(np.asarray(w) @ h + np.asarray(b))
    return np.asarray(net.weights[-1]) @ h + np.asarray(net.biases[-1])


def scalar_channel(net, c):
    """Channel c of the network as a plain jax scalar field (for eval_jet2)."""

    def f(p):
        h = p
        for w, b in zip(net.weights[:-1], net.biases[:-1]):
            h = jnp.tanh(jnp.asarray(w) @ h + jnp.asarray(b))
        return (jnp.asarray(net.weights[-1]) @ h + jnp.asarray(net.biases[-1]))[c]

    return f


def test_forward_matches_reference_chain():
    net = init_network((2, 13, 9, 3), seed=21)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1.0, 1.0, size=(20, 2))
    batched = np.asarray(forward_batch(net, pts))
    for i, x in enumerate(pts):
        ref = reference_forward(net, x)
        np.testing.assert_allclose(forward(net, x), ref, rtol=1e-13, atol=1e-14)
        np.testing.assert_allclose(batched[i], ref, rtol=1e-13, atol=1e-14)


def test_init_is_deterministic_and_scaled():
    a = init_network((2, 200, 200, 1), seed=4)
    b = init_network((2, 200, 200, 1), seed=4)
    c = init_network((2, 200, 200, 1), seed=5)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(np.asarray(wa), np.asarray(wb))
    assert not np.array_equal(np.asarray(a.weights[0]), np.asarray(c.weights[0]))
    for bias in a.biases:
        assert np.all(np.asarray(bias) == 0.0)
    w1 = np.asarray(a.weights[1])  # 200x200: enough samples for a std check
    expected = np.sqrt(2.0 / (200 + 200))
    assert abs(w1.std() - expected) < 0.1 * expected
    assert abs(w1.mean()) < 5.0 * expected / np.sqrt(w1.size)
    assert a.n_params == 2 * 200 + 200 + 200 * 200 + 200 + 200 + 1


def test_network_shape_validation():
    with pytest.raises(ValueError):
        init_network((2, 5), seed=0)  # no hidden layer
    with pytest.raises(ValueError):
        init_network((3, 5, 1), seed=0)  # wrong input width
    with pytest.raises(ValueError):
        init_network((2, 5, 2), seed=0)  # unsupported output width
    net = init_network((2, 5, 1), seed=0)
    with pytest.raises(ValueError):
        NetworkParams((2, 5, 1), net.weights[:1], net.biases)
    with pytest.raises(ValueError):
        NetworkParams((2, 6, 1), net.weights, net.biases)  # shape mismatch
    with pytest.raises(ValueError):
        forward(net, np.zeros(3))


def test_jets_match_generic_autodiff():
    """The hand-propagated jets and the jax-transform route must agree to
    rounding; they share the arithmetic but not the derivative mechanism."""
    net = init_network((2, 11, 8, 3), seed=13)
    pts = np.random.default_rng(2).uniform(-0.8, 0.8, size=(7, 2))
    jets = forward_jets(net, pts, 2)
    for c in range(3):
        f = scalar_channel(net, c)
        for i, x in enumerate(pts):
            jet = eval_jet2(f, x)
            assert float(jets["val"][i, c]) == pytest.approx(jet.value, rel=1e-12, abs=1e-14)
            assert float(jets["gx"][i, c]) == pytest.approx(jet.grad[0], rel=1e-12, abs=1e-13)
            assert float(jets["gy"][i, c]) == pytest.approx(jet.grad[1], rel=1e-12, abs=1e-13)
            assert float(jets["hxx"][i, c]) == pytest.approx(jet.hess[0, 0], rel=1e-12, abs=1e-12)
            assert float(jets["hxy"][i, c]) == pytest.approx(jet.hess[0, 1], rel=1e-12, abs=1e-12)
            assert float(jets["hyy"][i, c]) == pytest.approx(jet.hess[1, 1], rel=1e-12, abs=1e-12)


def test_jets_match_finite_differences():
    net = init_network((2, 10, 10, 1), seed=7)
    x = np.array([0.31, 0.62])
    jets = forward_jets(net, x[None, :], 2)
    h = 1.0e-6

    def f(q):
        return float(forward(net, q)[0])

    gx = (f(x + [h, 0]) - f(x - [h, 0])) / (2 * h)
    gy = (f(x + [0, h]) - f(x - [0, h])) / (2 * h)
    assert float(jets["gx"][0, 0]) == pytest.approx(gx, rel=1e-6, abs=1e-8)
    assert float(jets["gy"][0, 0]) == pytest.approx(gy, rel=1e-6, abs=1e-8)
    h = 1.0e-4
    hxx = (f(x + [h, 0]) - 2 * f(x) + f(x - [h, 0])) / h**2
    hyy = (f(x + [0, h]) - 2 * f(x) + f(x - [0, h])) / h**2
    hxy = (f(x + [h, h]) - f(x + [h, -h]) - f(x + [-h, h]) + f(x - [h, h])) / (4 * h**2)
    assert float(jets["hxx"][0, 0]) == pytest.approx(hxx, rel=1e-4, abs=1e-6)
    assert float(jets["hyy"][0, 0]) == pytest.approx(hyy, rel=1e-4, abs=1e-6)
    assert float(jets["hxy"][0, 0]) == pytest.approx(hxy, rel=1e-4, abs=1e-6)


def test_jets_orders_and_values():
    net = init_network((2, 9, 3), seed=1)
    pts = np.random.default_rng(1).uniform(-1, 1, size=(5, 2))
    j0 = forward_jets(net, pts, 0)
    j1 = forward_jets(net, pts, 1)
    j2 = forward_jets(net, pts, 2)
    ref = np.asarray(forward_batch(net, pts))
    for j in (j0, j1, j2):
        np.testing.assert_allclose(np.asarray(j["val"]), ref, rtol=1e-13)
    assert set(j0) == {"val"}
    assert set(j1) == {"val", "gx", "gy"}
    assert set(j2) == {"val", "gx", "gy", "hxx", "hxy", "hyy"}
    np.testing.assert_allclose(np.asarray(j1["gx"]), np.asarray(j2["gx"]), rtol=1e-14)
    with pytest.raises(ValueError):
        forward_jets(net, pts, 3)


def test_checkpoint_roundtrip_exact(tmp_path):
    net = init_network((2, 17, 5, 3), seed=42)
    path = tmp_path / "net.txt"
    save_checkpoint(net, path)
    back = load_checkpoint(path)
    assert back.layer_sizes == net.layer_sizes
    assert back.seed == net.seed
    for w0, w1 in zip(net.weights, back.weights):
        assert np.array_equal(np.asarray(w0), np.asarray(w1))
    for b0, b1 in zip(net.biases, back.biases):
        assert np.array_equal(np.asarray(b0), np.asarray(b1))
    # same bytes when re-saved
    path2 = tmp_path / "net2.txt"
    save_checkpoint(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_checkpoint_rejects_foreign_files(tmp_path):
    path = tmp_path / "bogus.txt"
    path.write_text("something else\n1 2 3\n")
    with pytest.raises(ValueError):
        load_checkpoint(path)
    path.write_text("tanh-mlp-checkpoint v1\nlayers 2 5 1\nnot-seed 0\n")
    with pytest.raises(ValueError):
        load_checkpoint(path)

"""Fully-connected tanh networks over 2d points.

Hidden layers apply tanh, the final layer is affine. Besides plain
evaluation, the forward pass can carry first- and second-order jets of the
inputs through every layer, which is how PDE residuals get exact spatial
derivatives in batch.
"""

import dataclasses
from functools import partial

import jax
import jax.numpy as jnp
import numpy as np

CHECKPOINT_HEADER = "tanh-mlp-checkpoint v1"


@jax.tree_util.register_pytree_node_class
@dataclasses.dataclass(frozen=True)
class NetworkParams:
    """Immutable weights and biases of one network.

    layer_sizes includes input and output widths, e.g. (2, 50, 50, 3).
    weights[i] has shape (layer_sizes[i+1], layer_sizes[i]).
    """

    layer_sizes: tuple
    weights: tuple
    biases: tuple
    seed: int = 0

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        if sizes[0] != 2:
            raise ValueError("networks take 2d points as input")
        if sizes[-1] not in (1, 3):
            raise ValueError("output width must be 1 (scalar field) or 3 (flow)")
        if len(self.weights) != len(sizes) - 1 or len(self.biases) != len(sizes) - 1:
            raise ValueError("weights/biases do not match layer_sizes")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if np.shape(w) != (sizes[i + 1], sizes[i]) or np.shape(b) != (sizes[i + 1],):
                raise ValueError(f"layer {i}: bad array shapes")

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    # pytree protocol: arrays are children, the rest rides along as aux data.
    def tree_flatten(self):
        return (self.weights, self.biases), (self.layer_sizes, self.seed)

    @classmethod
    def tree_unflatten(cls, aux, children):
        weights, biases = children
        obj = object.__new__(cls)
        object.__setattr__(obj, "layer_sizes", aux[0])
        object.__setattr__(obj, "weights", tuple(weights))
        object.__setattr__(obj, "biases", tuple(biases))
        object.__setattr__(obj, "seed", aux[1])
        return obj


def init_network(layer_sizes, seed: int) -> NetworkParams:
    """Deterministic Glorot-style init: zero-mean normals with variance
    2/(fan_in + fan_out) for weights, zero biases."""
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 3:
        raise ValueError("need at least one hidden layer")
    if any(s < 1 for s in sizes):
        raise ValueError("layer sizes must be positive")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        std = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(jnp.asarray(rng.normal(0.0, std, size=(fan_out, fan_in))))
        biases.append(jnp.zeros(fan_out, dtype=jnp.float64))
    return NetworkParams(sizes, tuple(weights), tuple(biases), seed=int(seed))


def forward(net: NetworkParams, x) -> np.ndarray:
    """Evaluate the network at a single point, returning a (k,) array."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (2,):
        raise ValueError(f"expected a 2d point, got shape {x.shape}")
    return np.asarray(forward_batch(net, x[None, :])[0])


@jax.jit
def forward_batch(net: NetworkParams, X) -> jnp.ndarray:
    """Evaluate the network at (N, 2) points, returning (N, k)."""
    h = jnp.asarray(X, dtype=jnp.float64)
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        h = jnp.tanh(h @ w.T + b)
    return h @ net.weights[-1].T + net.biases[-1]


@partial(jax.jit, static_argnums=2)
def forward_jets(net: NetworkParams, X, order: int):
    """Forward pass carrying input-direction jets through every layer.

    Returns a dict with 'val' of shape (N, k) and, for order >= 1, the
    spatial derivatives 'gx', 'gy'; for order == 2 additionally the second
    derivatives 'hxx', 'hxy', 'hyy', all of shape (N, k). An affine layer
    maps every jet component linearly; tanh composes via its first two
    derivatives. This is nested forward-mode, exact to rounding.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    X = jnp.asarray(X, dtype=jnp.float64)
    n = X.shape[0]
    v = X
    tx = jnp.broadcast_to(jnp.array([1.0, 0.0], dtype=X.dtype), (n, 2))
    ty = jnp.broadcast_to(jnp.array([0.0, 1.0], dtype=X.dtype), (n, 2))
    hxx = hxy = hyy = jnp.zeros_like(X)
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        v = v @ w.T + b
        if order >= 1:
            tx = tx @ w.T
            ty = ty @ w.T
        if order >= 2:
            hxx = hxx @ w.T
            hxy = hxy @ w.T
            hyy = hyy @ w.T
        if i < last:
            y = jnp.tanh(v)
            d1 = 1.0 - y * y  # tanh'
            if order >= 2:
                d2 = -2.0 * y * d1  # tanh''
                hxx = d2 * tx * tx + d1 * hxx
                hxy = d2 * tx * ty + d1 * hxy
                hyy = d2 * ty * ty + d1 * hyy
            if order >= 1:
                tx = d1 * tx
                ty = d1 * ty
            v = y
    out = {"val": v}
    if order >= 1:
        out["gx"] = tx
        out["gy"] = ty
    if order >= 2:
        out["hxx"] = hxx
        out["hxy"] = hxy
        out["hyy"] = hyy
    return out


def save_checkpoint(net: NetworkParams, path) -> None:
    """Write a versioned plain-text checkpoint (17 significant digits)."""
    lines = [CHECKPOINT_HEADER]
    lines.append("layers " + " ".join(str(s) for s in net.layer_sizes))
    lines.append(f"seed {net.seed}")
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        w = np.asarray(w)
        b = np.asarray(b)
        lines.append(f"w{i} {w.shape[0]} {w.shape[1]}")
        lines.extend(f"{v:.17g}" for v in w.ravel())
        lines.append(f"b{i} {b.shape[0]}")
        lines.extend(f"{v:.17g}" for v in b)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> NetworkParams:
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_HEADER:
        raise ValueError(f"not a {CHECKPOINT_HEADER!r} file: {path}")
    if not lines[1].startswith("layers ") or not lines[2].startswith("seed "):
        raise ValueError("malformed checkpoint header")
    sizes = tuple(int(t) for t in lines[1].split()[1:])
    seed = int(lines[2].split()[1])
    pos = 3
    weights = []
    biases = []
    for i in range(len(sizes) - 1):
        tag, rows, cols = lines[pos].split()
        if tag != f"w{i}":
            raise ValueError(f"expected w{i}, found {tag!r}")
        rows, cols = int(rows), int(cols)
        vals = [float(t) for t in lines[pos + 1 : pos + 1 + rows * cols]]
        weights.append(jnp.asarray(np.array(vals).reshape(rows, cols)))
        pos += 1 + rows * cols
        tag, cnt = lines[pos].split()
        if tag != f"b{i}":
            raise ValueError(f"expected b{i}, found {tag!r}")
        cnt = int(cnt)
        biases.append(jnp.asarray(np.array([float(t) for t in lines[pos + 1 : pos + 1 + cnt]])))
        pos += 1 + cnt
    return NetworkParams(sizes, tuple(weights), tuple(biases), seed=seed)

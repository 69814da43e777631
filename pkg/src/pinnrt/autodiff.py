"""Exact derivatives: spatial jets of scalar fields and parameter gradients.

Spatial derivatives (up to second order) and parameter gradients are both
machine-exact, never finite differences. Finite differencing is reserved for
the test suite, where it serves as the independent oracle.
"""

import dataclasses
from typing import Any, Callable

import jax
import jax.numpy as jnp
import numpy as np


@dataclasses.dataclass(frozen=True)
class Jet2:
    """Value, gradient and symmetric Hessian of a scalar field at one point."""

    value: float
    grad: np.ndarray  # shape (2,)
    hess: np.ndarray  # shape (2, 2)

    def __post_init__(self):
        object.__setattr__(self, "grad", np.asarray(self.grad, dtype=np.float64))
        object.__setattr__(self, "hess", np.asarray(self.hess, dtype=np.float64))
        if self.grad.shape != (2,) or self.hess.shape != (2, 2):
            raise ValueError("Jet2 expects a 2-vector gradient and a 2x2 Hessian")


@dataclasses.dataclass(frozen=True)
class ParamGradient:
    """Gradient of a scalar loss, arranged exactly like the parameter container."""

    tree: Any

    def congruent_with(self, params: Any) -> bool:
        """True when the gradient has the same tree layout and leaf shapes as params."""
        if jax.tree_util.tree_structure(self.tree) != jax.tree_util.tree_structure(params):
            return False
        mine = jax.tree_util.tree_leaves(self.tree)
        theirs = jax.tree_util.tree_leaves(params)
        return all(np.shape(a) == np.shape(b) for a, b in zip(mine, theirs))

    def leaves(self) -> list:
        return jax.tree_util.tree_leaves(self.tree)


def eval_jet2(scalar_field: Callable, x) -> Jet2:
    """Evaluate a scalar field together with its exact gradient and Hessian.

    scalar_field must map a length-2 jax array to a scalar and be built from
    differentiable operations. Non-finite results raise instead of silently
    propagating NaN.
    """
    x = jnp.asarray(x, dtype=jnp.float64)
    if x.shape != (2,):
        raise ValueError(f"expected a 2d point, got shape {x.shape}")
    value = scalar_field(x)
    if jnp.ndim(value) != 0:
        raise ValueError("scalar_field must return a scalar")
    grad = jax.grad(scalar_field)(x)
    hess = jax.jacfwd(jax.grad(scalar_field))(x)
    out = Jet2(float(value), np.asarray(grad), np.asarray(hess))
    if not (np.isfinite(out.value) and np.isfinite(out.grad).all() and np.isfinite(out.hess).all()):
        raise FloatingPointError(f"non-finite derivative at x={np.asarray(x)}")
    return out


def eval_param_gradient(loss: Callable, params: Any) -> ParamGradient:
    """Reverse-mode gradient of a scalar loss with respect to a parameter pytree.

    The loss value is checked first; a non-finite loss raises before any
    gradient work happens.
    """
    value = loss(params)
    if jnp.ndim(value) != 0:
        raise ValueError("loss must return a scalar")
    if not np.isfinite(float(value)):
        raise FloatingPointError(f"loss is not finite ({float(value)!r}); refusing to differentiate")
    grad = jax.grad(loss)(params)
    leaves = jax.tree_util.tree_leaves(grad)
    if not all(np.isfinite(np.asarray(leaf)).all() for leaf in leaves):
        raise FloatingPointError("gradient contains non-finite entries")
    return ParamGradient(grad)

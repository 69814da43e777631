"""Loss assembly, Adam, and the full-batch training loop.

The total loss is w_pde * L_pde + w_bc * L_bc, where L_pde is the mean of
squared interior residuals (vector residuals contribute the sum of their
squared components) and L_bc the mean of squared boundary mismatches.
Training is full batch with a fixed reduction order, so a (seed, config)
pair reproduces bit-identical histories.
"""

import dataclasses
import time
from typing import Any, Callable

import jax
import jax.numpy as jnp
import numpy as np

from .autodiff import ParamGradient
from .network import NetworkParams, init_network


@dataclasses.dataclass(frozen=True)
class LossWeights:
    """Positive PDE/boundary weights; bc_overrides reweights whole segments,
    e.g. (("left", 100.0),) pulls the left edge out of the pooled boundary
    mean and gives it its own weighted mean."""

    pde: float = 1.0
    bc: float = 10.0
    bc_overrides: tuple = ()

    def __post_init__(self):
        if self.pde <= 0.0 or self.bc <= 0.0:
            raise ValueError("loss weights must be strictly positive")
        object.__setattr__(self, "bc_overrides", tuple((str(t), float(w)) for t, w in self.bc_overrides))
        if any(w <= 0.0 for _, w in self.bc_overrides):
            raise ValueError("loss weights must be strictly positive")


@dataclasses.dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators congruent with the parameters."""

    m: Any
    v: Any
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1.0e-8
    lr: float = 1.0e-3

    def __post_init__(self):
        if self.t < 0 or not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("bad Adam state")
        if self.eps <= 0.0 or self.lr <= 0.0:
            raise ValueError("bad Adam state")

    @classmethod
    def init(cls, params, lr: float = 1.0e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1.0e-8):
        zeros = jax.tree_util.tree_map(jnp.zeros_like, params)
        return cls(m=zeros, v=jax.tree_util.tree_map(jnp.zeros_like, params), t=0, beta1=beta1, beta2=beta2, eps=eps, lr=lr)


@dataclasses.dataclass
class TrainRecord:
    """Per-epoch history plus the best-loss snapshot bookkeeping."""

    epoch: np.ndarray
    total: np.ndarray
    l_pde: np.ndarray
    l_bc: np.ndarray
    seconds: np.ndarray
    best_epoch: int
    best_loss: float
    stopped_early: bool = False

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("epoch,total,l_pde,l_bc,seconds\n")
            for e, t, lp, lb, s in zip(self.epoch, self.total, self.l_pde, self.l_bc, self.seconds):
                fh.write(f"{e},{t:.17g},{lp:.17g},{lb:.17g},{s:.6f}\n")


@dataclasses.dataclass(frozen=True)
class Problem:
    """A trainable collocation problem.

    interior_residual_fn(params, X) -> (N, m) residual components;
    boundary_residual_fn(params, Xb) -> (M,) mismatches. Both must be built
    from jax operations; per-point coefficients and boundary data are baked
    in against the collocation set the problem was built for.
    """

    name: str
    colloc: Any
    interior_points: Any
    boundary_points: Any
    boundary_tags: tuple
    interior_residual_fn: Callable
    boundary_residual_fn: Callable
    output_width: int = 1


class TrainingDivergedError(RuntimeError):
    def __init__(self, message: str, record: TrainRecord):
        super().__init__(message)
        self.record = record


def _bc_weight_vector(tags, weights: LossWeights) -> np.ndarray:
    """Per-point weights so that sum(w_i r_i^2) = sum over groups of
    group_weight * mean(r^2 within group). Segments without an override share
    one pooled group."""
    tags = list(tags)
    overrides = dict(weights.bc_overrides)
    w = np.zeros(len(tags))
    pooled = [i for i, t in enumerate(tags) if t not in overrides]
    if pooled:
        w[pooled] = weights.bc / len(pooled)
    for tag, wt in overrides.items():
        members = [i for i, t in enumerate(tags) if t == tag]
        if members:
            w[members] = wt / len(members)
    return w


def assemble_loss(problem: Problem, params: NetworkParams, colloc=None, weights: LossWeights = LossWeights()):
    """Weighted total loss with its (unweighted) per-term breakdown.

    colloc defaults to the set the problem was built for; passing a different
    set is a configuration error because per-point data is baked in.
    """
    if colloc is not None and colloc is not problem.colloc:
        same = (
            np.array_equal(np.asarray(colloc.interior), np.asarray(problem.interior_points))
            and np.array_equal(np.asarray(colloc.boundary), np.asarray(problem.boundary_points))
        )
        if not same:
            raise ValueError("problem was built for a different collocation set")
    n_int = int(np.shape(problem.interior_points)[0])
    n_b = int(np.shape(problem.boundary_points)[0])
    if n_int == 0 or n_b == 0:
        raise ValueError("empty interior or boundary collocation set")
    r_int = problem.interior_residual_fn(params, problem.interior_points)
    r_b = problem.boundary_residual_fn(params, problem.boundary_points)
    l_pde = jnp.mean(jnp.sum(r_int * r_int, axis=1))
    l_bc = jnp.mean(r_b * r_b)
    wvec = jnp.asarray(_bc_weight_vector(problem.boundary_tags, weights))
    total = weights.pde * l_pde + jnp.sum(wvec * r_b * r_b)
    return total, {"l_pde": l_pde, "l_bc": l_bc}


def _adam_update(params, grad, m, v, t, beta1, beta2, eps, lr):
    """One bias-corrected Adam step on parameter/gradient pytrees."""
    t = t + 1
    m = jax.tree_util.tree_map(lambda a, g: beta1 * a + (1.0 - beta1) * g, m, grad)
    v = jax.tree_util.tree_map(lambda a, g: beta2 * a + (1.0 - beta2) * g * g, v, grad)
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    params = jax.tree_util.tree_map(
        lambda p, a, b: p - lr * (a / c1) / (jnp.sqrt(b / c2) + eps), params, m, v
    )
    return params, m, v, t


def adam_step(params, grad, state: AdamState):
    """Public single Adam step; accepts a ParamGradient or a bare pytree."""
    gtree = grad.tree if isinstance(grad, ParamGradient) else grad
    for leaf in jax.tree_util.tree_leaves(gtree):
        if not np.isfinite(np.asarray(leaf)).all():
            raise FloatingPointError("non-finite gradient passed to adam_step")
    new_params, m, v, t = _adam_update(
        params, gtree, state.m, state.v, state.t, state.beta1, state.beta2, state.eps, state.lr
    )
    return new_params, dataclasses.replace(state, m=m, v=v, t=t)


@dataclasses.dataclass(frozen=True)
class TrainConfig:
    layer_sizes: tuple
    seed: int = 0
    epochs: int = 20000
    learning_rate: float = 1.0e-3
    lr_decay: float = 0.5
    lr_stages: int = 5
    weights: LossWeights = LossWeights()
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1.0e-8
    early_stop_loss: float = 1.0e-6
    early_stop_patience: int = 500
    divergence_factor: float = 1.0e3

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("need at least one epoch")
        if self.learning_rate <= 0.0 or not (0.0 < self.lr_decay <= 1.0) or self.lr_stages < 1:
            raise ValueError("malformed learning-rate schedule")

    def lr_at(self, epoch: int) -> float:
        """Stepped decay: one stage per 1/lr_stages of the budget."""
        stage = min(self.lr_stages - 1, (epoch * self.lr_stages) // self.epochs)
        return self.learning_rate * self.lr_decay**stage


def train(problem: Problem, config: TrainConfig):
    """Full-batch Adam on the assembled loss; returns the best-loss snapshot.

    The loop aborts with TrainingDivergedError when the total loss exceeds
    divergence_factor times its initial value, and may stop early once the
    total stays below early_stop_loss for early_stop_patience consecutive
    epochs.
    """
    params = init_network(config.layer_sizes, config.seed)
    if problem.output_width != params.layer_sizes[-1]:
        raise ValueError(
            f"problem {problem.name!r} needs {problem.output_width} outputs, config has {params.layer_sizes[-1]}"
        )
    weights = config.weights

    def loss_fn(p):
        return assemble_loss(problem, p, None, weights)

    step_raw = jax.value_and_grad(lambda p: loss_fn(p), has_aux=True)

    @jax.jit
    def step(p, m, v, t, lr):
        (total, parts), grads = step_raw(p)
        p2, m2, v2, t2 = _adam_update(p, grads, m, v, t, config.beta1, config.beta2, config.eps_adam, lr)
        return p2, m2, v2, t2, total, parts["l_pde"], parts["l_bc"]

    m = jax.tree_util.tree_map(jnp.zeros_like, params)
    v = jax.tree_util.tree_map(jnp.zeros_like, params)
    t = jnp.asarray(0, dtype=jnp.int64)

    totals, pdes, bcs, secs = [], [], [], []
    best_loss = np.inf
    best_params = params
    best_epoch = 0
    initial_total = None
    calm = 0
    stopped_early = False
    t0 = time.perf_counter()

    for epoch in range(config.epochs):
        lr = jnp.asarray(config.lr_at(epoch))
        prev = params
        params, m, v, t, total, l_pde, l_bc = step(params, m, v, t, lr)
        total = float(total)
        totals.append(total)
        pdes.append(float(l_pde))
        bcs.append(float(l_bc))
        secs.append(time.perf_counter() - t0)

        if not np.isfinite(total):
            which = "l_pde" if not np.isfinite(pdes[-1]) else "l_bc" if not np.isfinite(bcs[-1]) else "total"
            raise TrainingDivergedError(
                f"{problem.name}: non-finite loss ({which}) at epoch {epoch + 1}",
                _record(totals, pdes, bcs, secs, best_epoch, best_loss),
            )
        if initial_total is None:
            initial_total = total
        if total < best_loss:
            best_loss = total
            best_params = prev  # the parameters that produced this loss
            best_epoch = epoch + 1
        if total > config.divergence_factor * initial_total:
            raise TrainingDivergedError(
                f"{problem.name}: loss diverged ({total:.3e} > {config.divergence_factor:g} x {initial_total:.3e})",
                _record(totals, pdes, bcs, secs, best_epoch, best_loss),
            )
        calm = calm + 1 if total < config.early_stop_loss else 0
        if calm >= config.early_stop_patience:
            stopped_early = True
            break

    record = _record(totals, pdes, bcs, secs, best_epoch, best_loss, stopped_early)
    return best_params, record


def _record(totals, pdes, bcs, secs, best_epoch, best_loss, stopped_early=False) -> TrainRecord:
    n = len(totals)
    return TrainRecord(
        epoch=np.arange(1, n + 1),
        total=np.asarray(totals),
        l_pde=np.asarray(pdes),
        l_bc=np.asarray(bcs),
        seconds=np.asarray(secs),
        best_epoch=int(best_epoch),
        best_loss=float(best_loss),
        stopped_early=stopped_early,
    )

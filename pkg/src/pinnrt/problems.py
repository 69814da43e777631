"""Vectorized problem builders: collocation + boundary tables -> Problem.

Per-point coefficients (permeability, dispersion tensors and their
divergence, boundary values) are evaluated once at build time and baked into
the residual closures, so the training step touches only network evaluation
and dense array math.
"""

import numpy as np
import jax
import jax.numpy as jnp

from .geometry import BcSpec, CollocationSet
from .network import NetworkParams, forward_jets
from .physics import VX, VY, P, DispersionParams, MediumModel, dispersion_tensor_jnp
from .training import Problem


def flow_problem(colloc: CollocationSet, bc: BcSpec, medium: MediumModel, name: str = "flow") -> Problem:
    """Mixed-form Darcy problem for a 3-output network."""
    k_int = np.array([float(medium.permeability(p)) for p in colloc.interior])
    if (k_int <= 0.0).any():
        raise ValueError("permeability must be positive at every interior point")
    kinds, values = bc.resolve(colloc)
    if any(kind not in ("pressure", "normal_velocity") for kind in kinds):
        raise ValueError("flow problems accept only pressure/normal-velocity boundaries")
    is_pressure = jnp.asarray(np.array([kind == "pressure" for kind in kinds]))
    bc_values = jnp.asarray(np.array([float(v) for v in values]))
    normals = jnp.asarray(colloc.normals)
    k_j = jnp.asarray(k_int)
    mu, rho = medium.viscosity, medium.density
    bx, by = medium.body_force

    def interior_residual(params, x):
        jets = forward_jets(params, x, 1)
        val, gx, gy = jets["val"], jets["gx"], jets["gy"]
        mom_x = mu / k_j * val[:, VX] + gx[:, P] - rho * bx
        mom_y = mu / k_j * val[:, VY] + gy[:, P] - rho * by
        mass = gx[:, VX] + gy[:, VY]
        return jnp.stack([mom_x, mom_y, mass], axis=1)

    def boundary_residual(params, x):
        val = forward_jets(params, x, 0)["val"]
        r_p = val[:, P] - bc_values
        r_v = val[:, VX] * normals[:, 0] + val[:, VY] * normals[:, 1] - bc_values
        return jnp.where(is_pressure, r_p, r_v)

    return Problem(
        name=name,
        colloc=colloc,
        interior_points=jnp.asarray(colloc.interior),
        boundary_points=jnp.asarray(colloc.boundary),
        boundary_tags=tuple(colloc.tags),
        interior_residual_fn=interior_residual,
        boundary_residual_fn=boundary_residual,
        output_width=3,
    )


def tensor_field_arrays(d_fn, points: np.ndarray, with_divergence: bool = True):
    """Evaluate a jax-traceable tensor field and its divergence on points.

    Returns (D, div_d) with shapes (N, 2, 2) and (N, 2);
    (div D)_j = sum_i dD_ij/dx_i, taken exactly.
    """
    pts = jnp.asarray(points, dtype=jnp.float64)
    d = jax.vmap(d_fn)(pts)
    if not with_divergence:
        return np.asarray(d), np.zeros((len(points), 2))

    def div_at(x):
        jac = jax.jacfwd(d_fn)(x)  # [i, j, k] = dD_ij/dx_k
        return jnp.array([jac[0, 0, 0] + jac[1, 0, 1], jac[0, 1, 0] + jac[1, 1, 1]])

    div_d = jax.vmap(div_at)(pts)
    return np.asarray(d), np.asarray(div_d)


def dispersion_field(v_fn, params: DispersionParams):
    """Dispersion tensor as a jax-traceable field of position."""

    def d_at(x):
        return dispersion_tensor_jnp(v_fn(x), params)

    return d_at


def frozen_velocity(flow_net: NetworkParams):
    """Velocity components of a trained flow network as a traceable field."""

    def v_at(x):
        h = x
        for w, b in zip(flow_net.weights[:-1], flow_net.biases[:-1]):
            h = jnp.tanh(w @ h + b)
        out = flow_net.weights[-1] @ h + flow_net.biases[-1]
        return out[:2]

    return v_at


def scalar_diffusion_problem(
    colloc: CollocationSet,
    bc: BcSpec,
    d_int: np.ndarray,
    div_d_int: np.ndarray,
    d_bnd: np.ndarray,
    source=None,
    component: int | None = None,
    name: str = "diffusion",
    residual_scale: float = 1.0,
) -> Problem:
    """Steady diffusion -div(D grad c) = f for a scalar network.

    d_int/div_d_int hold the tensor and its divergence at interior points,
    d_bnd the tensor at boundary points (needed for flux conditions). When
    the boundary table stores stacked per-field values, component selects the
    field. residual_scale multiplies the interior residual only; with f = 0,
    scaling the operator leaves the solution unchanged but conditions the
    loss (used for strongly anisotropic tensors).
    """
    d_int = jnp.asarray(d_int)
    div_d_int = jnp.asarray(div_d_int)
    d_bnd = jnp.asarray(d_bnd)
    if d_int.shape != (len(colloc.interior), 2, 2) or div_d_int.shape != (len(colloc.interior), 2):
        raise ValueError("tensor arrays do not match the interior point count")
    if d_bnd.shape != (len(colloc.boundary), 2, 2):
        raise ValueError("boundary tensor array does not match the boundary point count")
    kinds, raw_values = bc.resolve(colloc)
    if any(kind not in ("concentration", "flux") for kind in kinds):
        raise ValueError("diffusion problems accept only concentration/flux boundaries")
    picked = []
    for v in raw_values:
        v = np.asarray(v, dtype=np.float64)
        picked.append(float(v) if v.ndim == 0 else float(v[component]))
    is_dirichlet = jnp.asarray(np.array([kind == "concentration" for kind in kinds]))
    bc_values = jnp.asarray(np.array(picked))
    normals = jnp.asarray(colloc.normals)
    f_int = (
        jnp.zeros(len(colloc.interior))
        if source is None
        else jnp.asarray(np.array([float(source(p)) for p in colloc.interior]))
    )
    scale = float(residual_scale)

    def interior_residual(params, x):
        jets = forward_jets(params, x, 2)
        gx, gy = jets["gx"][:, 0], jets["gy"][:, 0]
        hxx, hxy, hyy = jets["hxx"][:, 0], jets["hxy"][:, 0], jets["hyy"][:, 0]
        div_flux = (
            d_int[:, 0, 0] * hxx
            + 2.0 * d_int[:, 0, 1] * hxy
            + d_int[:, 1, 1] * hyy
            + div_d_int[:, 0] * gx
            + div_d_int[:, 1] * gy
        )
        return (scale * (-div_flux - f_int))[:, None]

    def boundary_residual(params, x):
        jets = forward_jets(params, x, 1)
        val = jets["val"][:, 0]
        gx, gy = jets["gx"][:, 0], jets["gy"][:, 0]
        flux_x = d_bnd[:, 0, 0] * gx + d_bnd[:, 0, 1] * gy
        flux_y = d_bnd[:, 1, 0] * gx + d_bnd[:, 1, 1] * gy
        r_flux = -(normals[:, 0] * flux_x + normals[:, 1] * flux_y) - bc_values
        r_dir = val - bc_values
        return jnp.where(is_dirichlet, r_dir, r_flux)

    return Problem(
        name=name,
        colloc=colloc,
        interior_points=jnp.asarray(colloc.interior),
        boundary_points=jnp.asarray(colloc.boundary),
        boundary_tags=tuple(colloc.tags),
        interior_residual_fn=interior_residual,
        boundary_residual_fn=boundary_residual,
        output_width=1,
    )

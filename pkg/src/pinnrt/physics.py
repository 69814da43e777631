"""Pointwise PDE residuals and coefficient models.

Flow is Darcy in mixed form: the network predicts (v_x, v_y, p) jointly, the
momentum residual is mu * k(x)^-1 * v + grad p - rho * b and the mass residual
is div v. Transport is steady diffusion -div(D grad c) = f with a symmetric
positive-definite tensor D that may vary in space.
"""

import dataclasses
import math
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from .network import NetworkParams, forward_jets

# Output channel order of a 3-output flow network.
VX, VY, P = 0, 1, 2


@dataclasses.dataclass(frozen=True)
class MediumModel:
    """Viscosity, density, body force and pointwise permeability of the medium."""

    permeability: Callable  # (x, y) or point -> float, sampled pointwise
    viscosity: float = 1.0
    density: float = 1.0
    body_force: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.viscosity <= 0.0:
            raise ValueError("viscosity must be positive")
        if self.density <= 0.0:
            raise ValueError("density must be positive")
        object.__setattr__(self, "body_force", (float(self.body_force[0]), float(self.body_force[1])))


@dataclasses.dataclass(frozen=True)
class DispersionParams:
    """Longitudinal/transverse dispersivities with a molecular floor.

    alpha_l >= alpha_t >= 0; d_m >= 0 adds an isotropic molecular term;
    eps_v keeps the tensor finite where the velocity vanishes.
    """

    alpha_l: float
    alpha_t: float
    d_m: float = 0.0
    eps_v: float = 1.0e-8

    def __post_init__(self):
        if self.alpha_t < 0.0 or self.alpha_l < self.alpha_t:
            raise ValueError("need alpha_l >= alpha_t >= 0")
        if self.d_m < 0.0:
            raise ValueError("molecular diffusivity must be non-negative")
        if self.eps_v <= 0.0:
            raise ValueError("velocity floor must be positive")


@dataclasses.dataclass(frozen=True)
class AnisotropyTensorSpec:
    """Rotated diagonal tensor: principal values lam1 >= lam2 at angle theta."""

    theta: float
    lam1: float
    lam2: float

    def __post_init__(self):
        if self.lam2 <= 0.0 or self.lam1 < self.lam2:
            raise ValueError("need lam1 >= lam2 > 0")


@dataclasses.dataclass(frozen=True)
class FlowResidual:
    """Momentum residual (2-vector) and mass residual (scalar) at one point."""

    momentum: np.ndarray
    mass: float

    def __post_init__(self):
        object.__setattr__(self, "momentum", np.asarray(self.momentum, dtype=np.float64))
        if self.momentum.shape != (2,):
            raise ValueError("momentum residual must be a 2-vector")


def darcy_residual(flow_net: NetworkParams, x, medium: MediumModel) -> FlowResidual:
    """Mixed-form Darcy residual of a 3-output network at one point."""
    x = np.asarray(x, dtype=np.float64)
    if flow_net.layer_sizes[-1] != 3:
        raise ValueError("darcy_residual needs a 3-output network (v_x, v_y, p)")
    k = float(medium.permeability(x))
    if k <= 0.0:
        raise ValueError(f"permeability must be positive, got {k} at {x}")
    jets = forward_jets(flow_net, x[None, :], 1)
    val = np.asarray(jets["val"][0])
    gx = np.asarray(jets["gx"][0])
    gy = np.asarray(jets["gy"][0])
    mu, rho = medium.viscosity, medium.density
    b = medium.body_force
    mom = np.array(
        [
            mu / k * val[VX] + gx[P] - rho * b[0],
            mu / k * val[VY] + gy[P] - rho * b[1],
        ]
    )
    mass = gx[VX] + gy[VY]
    return FlowResidual(mom, float(mass))


def pressure_bc_residual(flow_net: NetworkParams, x, value: float) -> float:
    """p(x) - prescribed pressure."""
    jets = forward_jets(flow_net, np.asarray(x, dtype=np.float64)[None, :], 0)
    return float(jets["val"][0, P]) - float(value)


def normal_velocity_bc_residual(flow_net: NetworkParams, x, normal, value: float) -> float:
    """v(x) . n - prescribed normal velocity."""
    normal = np.asarray(normal, dtype=np.float64)
    jets = forward_jets(flow_net, np.asarray(x, dtype=np.float64)[None, :], 0)
    val = np.asarray(jets["val"][0])
    return float(val[VX] * normal[0] + val[VY] * normal[1]) - float(value)


def concentration_bc_residual(c_net: NetworkParams, x, value: float) -> float:
    """c(x) - prescribed concentration."""
    jets = forward_jets(c_net, np.asarray(x, dtype=np.float64)[None, :], 0)
    return float(jets["val"][0, 0]) - float(value)


def flux_bc_residual(c_net: NetworkParams, x, normal, d_field: Callable, value: float) -> float:
    """-n . (D grad c) - prescribed diffusive flux."""
    x = np.asarray(x, dtype=np.float64)
    normal = np.asarray(normal, dtype=np.float64)
    jets = forward_jets(c_net, x[None, :], 1)
    grad = np.array([float(jets["gx"][0, 0]), float(jets["gy"][0, 0])])
    d = np.asarray(d_field(jnp.asarray(x)), dtype=np.float64)
    return float(-normal @ (d @ grad)) - float(value)


def diffusion_residual(c_net: NetworkParams, x, d_field: Callable, source: Callable | None = None) -> float:
    """-div(D grad c)(x) - f(x) for a scalar network.

    d_field must map a length-2 jax array to a (2, 2) tensor built from jax
    operations; its spatial divergence is taken exactly, so the residual uses
    the full product-rule expansion -(D : H + (div D) . grad c) - f.
    """
    x = np.asarray(x, dtype=np.float64)
    if c_net.layer_sizes[-1] != 1:
        raise ValueError("diffusion_residual needs a scalar network")
    jets = forward_jets(c_net, x[None, :], 2)
    grad = np.array([float(jets["gx"][0, 0]), float(jets["gy"][0, 0])])
    hess = np.array(
        [
            [float(jets["hxx"][0, 0]), float(jets["hxy"][0, 0])],
            [float(jets["hxy"][0, 0]), float(jets["hyy"][0, 0])],
        ]
    )
    xj = jnp.asarray(x)
    d = np.asarray(d_field(xj), dtype=np.float64)
    if d.shape != (2, 2):
        raise ValueError("d_field must return a 2x2 tensor")
    # div D: row i of jac is dD/dx_i laid out as (2,2); (div D)_j = sum_i dD_ij/dx_i.
    jac = np.asarray(jax.jacfwd(d_field)(xj), dtype=np.float64)  # (2, 2, 2): [i, j, k] = dD_ij/dx_k
    div_d = np.array([jac[0, 0, 0] + jac[1, 0, 1], jac[0, 1, 0] + jac[1, 1, 1]])
    f = 0.0 if source is None else float(source(x))
    return float(-(np.sum(d * hess) + div_d @ grad) - f)


def dispersion_tensor(v, params: DispersionParams) -> np.ndarray:
    """Velocity-dependent dispersion tensor.

    D = d_m I + alpha_t s I + ((alpha_l - alpha_t)/s) v v^T with
    s = max(|v|, eps_v). Eigenvalues are d_m + alpha_l s along the flow and
    d_m + alpha_t s across it whenever |v| clears the floor.
    """
    return np.asarray(dispersion_tensor_jnp(jnp.asarray(v, dtype=jnp.float64), params))


def dispersion_tensor_jnp(v, params: DispersionParams) -> jnp.ndarray:
    # sqrt(max(|v|^2, eps^2)) equals max(|v|, eps) but keeps gradients finite at v = 0.
    s = jnp.sqrt(jnp.maximum(v[0] * v[0] + v[1] * v[1], params.eps_v**2))
    iso = params.d_m + params.alpha_t * s
    return iso * jnp.eye(2) + ((params.alpha_l - params.alpha_t) / s) * jnp.outer(v, v)


def rotated_anisotropy(spec: AnisotropyTensorSpec) -> np.ndarray:
    """Constant tensor from rotating diag(lam1, lam2).

    Built as [[c, s], [-s, c]] diag(lam1, lam2) [[c, -s], [s, c]] with
    c = cos(theta), s = sin(theta). With this ordering the lam1 eigenvector
    sits at angle -theta from the x-axis (the eigendecomposition test pins
    the convention down).
    """
    c, s = math.cos(spec.theta), math.sin(spec.theta)
    rot = np.array([[c, s], [-s, c]])
    return rot @ np.diag([spec.lam1, spec.lam2]) @ rot.T


_VEL_AMPLITUDE = (0.08, 0.02, 0.01)
_VEL_PX = (4.0, 5.0, 10.0)
_VEL_QY = (1.0, 5.0, 10.0)


def explicit_velocity(x) -> np.ndarray:
    """Closed-form divergence-free velocity on the unit square.

    A uniform horizontal drift plus three solenoidal trigonometric modes;
    div v vanishes identically and v(0, 0) = (1, 0).
    """
    return np.asarray(explicit_velocity_jnp(jnp.asarray(x, dtype=jnp.float64)))


def explicit_velocity_jnp(x) -> jnp.ndarray:
    pi = jnp.pi
    vx = 1.0
    vy = 0.0
    for a, p, q in zip(_VEL_AMPLITUDE, _VEL_PX, _VEL_QY):
        vx = vx + a * (q * pi) * jnp.cos(p * pi * x[0] - pi / 2.0) * jnp.cos(q * pi * x[1])
        vy = vy + a * (p * pi) * jnp.sin(p * pi * x[0] - pi / 2.0) * jnp.sin(q * pi * x[1])
    return jnp.array([vx, vy])


def patch_permeability(test: str, k1: float = 1.0, k2: float = 10.0) -> Callable:
    """Two-region permeability for the patch tests; points on the dividing
    line take the k2 side (closed-on-high convention)."""
    if k1 <= 0.0 or k2 <= 0.0:
        raise ValueError("permeabilities must be positive")
    k1, k2 = float(k1), float(k2)
    if test == "vertical":
        return lambda x: k1 if x[0] < 0.5 else k2
    if test == "horizontal":
        return lambda x: k1 if x[1] < 0.5 else k2
    if test == "inclined":
        return lambda x: k1 if x[1] > x[0] else k2
    raise ValueError(f"unknown patch test {test!r}")

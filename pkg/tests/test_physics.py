"""Coefficient models and pointwise residuals.

Frozen values below were computed by hand (patch tensors, rotation entries)
or with 50-digit arithmetic (explicit velocity samples); the code must hit
them to rounding, not merely to test tolerance.
"""

import math

import jax
import jax.numpy as jnp
import numpy as np
import pytest

from pinnrt import (
    AnisotropyTensorSpec,
    DispersionParams,
    MediumModel,
    VX,
    VY,
    P,
    darcy_residual,
    dispersion_tensor,
    explicit_velocity,
    forward,
    init_network,
    patch_permeability,
    rotated_anisotropy,
)
from pinnrt.physics import (
    concentration_bc_residual,
    diffusion_residual,
    explicit_velocity_jnp,
    flux_bc_residual,
    normal_velocity_bc_residual,
    pressure_bc_residual,
)


# ---------------------------------------------------------------- dispersion


def test_dispersion_aligned_flow():
    d = dispersion_tensor([1.0, 0.0], DispersionParams(alpha_l=1.0, alpha_t=1.0e-5))
    np.testing.assert_allclose(d, [[1.0, 0.0], [0.0, 1.0e-5]], rtol=1e-15, atol=0.0)


def test_dispersion_oblique_flow():
    # |v| = 5, alpha_t = 0: D = (1/5) v v^T
    d = dispersion_tensor([3.0, 4.0], DispersionParams(alpha_l=1.0, alpha_t=0.0))
    np.testing.assert_allclose(d, [[1.8, 2.4], [2.4, 3.2]], rtol=1e-15)


def test_dispersion_stagnant_is_molecular():
    d = dispersion_tensor([0.0, 0.0], DispersionParams(alpha_l=0.0, alpha_t=0.0, d_m=0.37))
    assert np.array_equal(d, 0.37 * np.eye(2))


def test_dispersion_eigenstructure():
    rng = np.random.default_rng(8)
    params = DispersionParams(alpha_l=1.0, alpha_t=1.0e-5, d_m=1.0e-6)
    for _ in range(300):
        v = rng.uniform(-2.0, 2.0, size=2)
        s = np.linalg.norm(v)
        if s < 1.0e-6:
            continue
        d = dispersion_tensor(v, params)
        np.testing.assert_allclose(d, d.T, rtol=0, atol=0)
        w, vecs = np.linalg.eigh(d)
        lam_t = params.d_m + params.alpha_t * s
        lam_l = params.d_m + params.alpha_l * s
        np.testing.assert_allclose(sorted(w), [lam_t, lam_l], rtol=1e-10)
        u = vecs[:, np.argmax(w)]
        # cross-product angle: stable for tiny angles where arccos is not
        angle = np.arcsin(min(1.0, abs(u[0] * v[1] - u[1] * v[0]) / s))
        assert angle <= 1.0e-8


def test_dispersion_floor_keeps_tensor_finite():
    params = DispersionParams(alpha_l=1.0, alpha_t=0.5)
    d = dispersion_tensor([0.0, 0.0], params)
    assert np.all(np.isfinite(d))
    np.testing.assert_allclose(d, params.alpha_t * params.eps_v * np.eye(2), rtol=1e-15)


def test_dispersion_params_validation():
    with pytest.raises(ValueError):
        DispersionParams(alpha_l=0.5, alpha_t=1.0)
    with pytest.raises(ValueError):
        DispersionParams(alpha_l=1.0, alpha_t=-0.1)
    with pytest.raises(ValueError):
        DispersionParams(alpha_l=1.0, alpha_t=0.0, d_m=-1.0)
    with pytest.raises(ValueError):
        DispersionParams(alpha_l=1.0, alpha_t=0.0, eps_v=0.0)


# ------------------------------------------------------- rotated anisotropy


def test_rotated_anisotropy_frozen_matrix():
    d = rotated_anisotropy(AnisotropyTensorSpec(theta=math.pi / 6.0, lam1=1.0e4, lam2=1.0))
    # off-diagonal is -(lam1 - lam2) sin(th) cos(th) = -9999 sqrt(3)/4
    np.testing.assert_allclose(
        d,
        [[7500.25, -4329.6940062203010145], [-4329.6940062203010145, 2500.75]],
        rtol=1e-15,
    )
    w, vecs = np.linalg.eigh(d)
    np.testing.assert_allclose(sorted(w), [1.0, 1.0e4], rtol=1e-12)
    u = vecs[:, np.argmax(w)]
    # principal axis at angle -theta
    target = np.array([math.sqrt(3.0) / 2.0, -0.5])
    assert min(np.linalg.norm(u - target), np.linalg.norm(u + target)) < 1e-12


def test_rotated_anisotropy_identity_cases():
    np.testing.assert_allclose(
        rotated_anisotropy(AnisotropyTensorSpec(theta=0.0, lam1=3.0, lam2=2.0)),
        np.diag([3.0, 2.0]),
        rtol=0,
        atol=0,
    )
    iso = rotated_anisotropy(AnisotropyTensorSpec(theta=0.7, lam1=5.0, lam2=5.0))
    np.testing.assert_allclose(iso, 5.0 * np.eye(2), atol=1e-15)
    with pytest.raises(ValueError):
        AnisotropyTensorSpec(theta=0.0, lam1=1.0, lam2=2.0)
    with pytest.raises(ValueError):
        AnisotropyTensorSpec(theta=0.0, lam1=1.0, lam2=0.0)


# --------------------------------------------------------- explicit velocity


def test_explicit_velocity_frozen_samples():
    cases = {
        (0.5, 0.25): (0.77785585309208169, -0.39670200474635928),
        (0.3, 0.7): (1.0868314853690824, 0.65798370767240424),
        (0.123, 0.456): (1.2608745153901808, 0.29202119704115322),
    }
    for xy, expected in cases.items():
        np.testing.assert_allclose(explicit_velocity(xy), expected, rtol=1e-13)
    v0 = explicit_velocity((0.0, 0.0))
    assert v0[0] == 1.0 and v0[1] == 0.0


def test_explicit_velocity_is_divergence_free():
    jac = jax.jacfwd(explicit_velocity_jnp)
    rng = np.random.default_rng(11)
    pts = rng.uniform(0.0, 1.0, size=(200, 2))
    for x in pts:
        j = np.asarray(jac(jnp.asarray(x)))
        assert abs(j[0, 0] + j[1, 1]) <= 1.0e-10


# -------------------------------------------------------- patch permeability


def test_patch_permeability_regions():
    k = patch_permeability("vertical")
    assert k((0.25, 0.5)) == 1.0 and k((0.75, 0.5)) == 10.0 and k((0.5, 0.1)) == 10.0
    k = patch_permeability("horizontal")
    assert k((0.5, 0.75)) == 10.0 and k((0.5, 0.25)) == 1.0 and k((0.1, 0.5)) == 10.0
    k = patch_permeability("inclined", k1=2.0, k2=3.0)
    assert k((0.2, 0.8)) == 2.0 and k((0.8, 0.2)) == 3.0 and k((0.4, 0.4)) == 3.0
    with pytest.raises(ValueError):
        patch_permeability("diagonal")
    with pytest.raises(ValueError):
        patch_permeability("vertical", k1=0.0)


# ------------------------------------------------------- residual operators


def fd_scalar(f, x, h=1.0e-6):
    """Central-difference gradient of a scalar callable."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def test_darcy_residual_matches_finite_differences():
    net = init_network((2, 9, 6, 3), seed=3)
    medium = MediumModel(permeability=lambda x: 4.0, viscosity=2.0, density=3.0, body_force=(0.5, -0.25))
    x = np.array([0.4, 0.6])
    val = np.asarray(forward(net, x))
    res = darcy_residual(net, x, medium)
    gp = fd_scalar(lambda q: float(forward(net, q)[P]), x)
    expected_mom = 2.0 / 4.0 * val[:2] + gp - 3.0 * np.array([0.5, -0.25])
    np.testing.assert_allclose(res.momentum, expected_mom, rtol=1e-6, atol=1e-8)
    dvx = fd_scalar(lambda q: float(forward(net, q)[VX]), x)
    dvy = fd_scalar(lambda q: float(forward(net, q)[VY]), x)
    assert res.mass == pytest.approx(dvx[0] + dvy[1], rel=1e-6, abs=1e-8)


def test_darcy_residual_validation():
    scalar_net = init_network((2, 5, 1), seed=0)
    medium = MediumModel(permeability=lambda x: 1.0)
    with pytest.raises(ValueError):
        darcy_residual(scalar_net, (0.5, 0.5), medium)
    net = init_network((2, 5, 3), seed=0)
    bad = MediumModel(permeability=lambda x: -1.0)
    with pytest.raises(ValueError):
        darcy_residual(net, (0.5, 0.5), bad)
    with pytest.raises(ValueError):
        MediumModel(permeability=lambda x: 1.0, viscosity=0.0)
    with pytest.raises(ValueError):
        MediumModel(permeability=lambda x: 1.0, density=-1.0)


def variable_tensor(x):
    """Symmetric positive-definite test tensor with analytic divergence."""
    return jnp.array(
        [
            [1.0 + x[0] ** 2, 0.5 * x[0] * x[1]],
            [0.5 * x[0] * x[1], 2.0 + x[1] ** 2],
        ]
    )


def test_diffusion_residual_matches_finite_differences():
    net = init_network((2, 8, 7, 1), seed=5)
    x = np.array([0.3, 0.8])

    def c(q):
        return float(forward(net, q)[0])

    grad = fd_scalar(c, x)
    h = 1.0e-4
    hess = np.empty((2, 2))
    hess[0, 0] = (c(x + [h, 0]) - 2 * c(x) + c(x - [h, 0])) / h**2
    hess[1, 1] = (c(x + [0, h]) - 2 * c(x) + c(x - [0, h])) / h**2
    hess[0, 1] = hess[1, 0] = (
        c(x + [h, h]) - c(x + [h, -h]) - c(x + [-h, h]) + c(x - [h, h])
    ) / (4 * h**2)
    d = np.asarray(variable_tensor(jnp.asarray(x)))
    # div D for the tensor above: (2x + x/2, y/2 + 2y)
    div_d = np.array([2.5 * x[0], 2.5 * x[1]])
    f_src = x[0] + 2.0 * x[1]
    expected = -(np.sum(d * hess) + div_d @ grad) - f_src
    got = diffusion_residual(net, x, variable_tensor, source=lambda q: q[0] + 2.0 * q[1])
    assert got == pytest.approx(expected, rel=1e-4, abs=1e-6)
    # constant tensor, no source: plain -D : H
    const = rotated_anisotropy(AnisotropyTensorSpec(theta=0.3, lam1=2.0, lam2=1.0))
    got2 = diffusion_residual(net, x, lambda q: jnp.asarray(const))
    assert got2 == pytest.approx(-np.sum(const * hess), rel=1e-4, abs=1e-6)


def test_diffusion_residual_validation():
    flow_net = init_network((2, 5, 3), seed=0)
    with pytest.raises(ValueError):
        diffusion_residual(flow_net, (0.5, 0.5), lambda q: jnp.eye(2))
    net = init_network((2, 5, 1), seed=0)
    with pytest.raises(ValueError):
        diffusion_residual(net, (0.5, 0.5), lambda q: jnp.ones(2))


def test_boundary_residual_helpers():
    net = init_network((2, 6, 3), seed=9)
    x = np.array([0.0, 0.4])
    val = np.asarray(forward(net, x))
    assert pressure_bc_residual(net, x, 1.0) == pytest.approx(val[P] - 1.0, rel=1e-13)
    n = np.array([-1.0, 0.0])
    assert normal_velocity_bc_residual(net, x, n, 0.25) == pytest.approx(
        -val[VX] - 0.25, rel=1e-13
    )
    c_net = init_network((2, 6, 1), seed=9)
    cv = float(forward(c_net, x)[0])
    assert concentration_bc_residual(c_net, x, 0.5) == pytest.approx(cv - 0.5, rel=1e-13)
    grad = fd_scalar(lambda q: float(forward(c_net, q)[0]), x)
    d = np.asarray(variable_tensor(jnp.asarray(x)))
    expected = -n @ (d @ grad) - 0.1
    assert flux_bc_residual(c_net, x, n, variable_tensor, 0.1) == pytest.approx(
        expected, rel=1e-6, abs=1e-8
    )

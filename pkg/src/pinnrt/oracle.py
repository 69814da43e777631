"""Independent reference solutions: closed-form patch algebra and
finite-difference solvers.

These never touch the networks; they exist so trained fields can be judged
against something computed a completely different way. The diffusion stencil
deliberately does not enforce non-negativity: whether it violates the maximum
principle under strong anisotropy is itself a reported result.
"""

import dataclasses

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .physics import patch_permeability

_PATCHES = ("vertical", "horizontal", "inclined")


@dataclasses.dataclass(frozen=True)
class FieldGrid:
    """Row-major values on a uniform rectangular grid of points.

    values[iy, ix] sits at (origin + ix*spacing, origin + iy*spacing).
    """

    n_x: int
    n_y: int
    origin: float
    spacing: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.shape != (self.n_y, self.n_x):
            raise ValueError("values shape must be (n_y, n_x)")
        if not np.isfinite(self.values).all():
            raise ValueError("field contains non-finite values")

    @property
    def xs(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n_x)

    @property
    def ys(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n_y)

    def sample_nearest(self, x: float, y: float) -> float:
        ix = int(np.clip(round((x - self.origin) / self.spacing), 0, self.n_x - 1))
        iy = int(np.clip(round((y - self.origin) / self.spacing), 0, self.n_y - 1))
        return float(self.values[iy, ix])

    def sample_bilinear(self, x: float, y: float) -> float:
        fx = np.clip((x - self.origin) / self.spacing, 0.0, self.n_x - 1.0)
        fy = np.clip((y - self.origin) / self.spacing, 0.0, self.n_y - 1.0)
        ix = min(int(fx), self.n_x - 2)
        iy = min(int(fy), self.n_y - 2)
        tx, ty = fx - ix, fy - iy
        v = self.values
        return float(
            (1 - tx) * (1 - ty) * v[iy, ix]
            + tx * (1 - ty) * v[iy, ix + 1]
            + (1 - tx) * ty * v[iy + 1, ix]
            + tx * ty * v[iy + 1, ix + 1]
        )

    def midline_row(self) -> np.ndarray:
        """Values along y = 0.5; requires a row of points exactly there."""
        iy = (np.abs(self.ys - 0.5)).argmin()
        if abs(self.ys[iy] - 0.5) > 1e-12:
            raise ValueError("grid has no row at y = 0.5")
        return self.values[iy, :].copy()


def analytic_patch(test: str, k1: float, k2: float, x) -> tuple:
    """Closed-form pressure and velocity for the vertical/horizontal patch.

    Unit square, unit viscosity, p=1 on the left, p=0 on the right, sealed
    top and bottom. Vertical split: two resistances in series, so the flux
    v_x = 2 k1 k2/(k1+k2) is uniform and p is piecewise linear. Horizontal
    split: independent parallel layers, p = 1-x everywhere and v_x = k(y).
    The inclined split has no closed form; use solve_flow_fd.
    """
    if test == "inclined":
        raise ValueError("no closed-form solution for the inclined patch; use solve_flow_fd")
    if test not in _PATCHES:
        raise ValueError(f"unknown patch test {test!r}")
    if k1 <= 0.0 or k2 <= 0.0:
        raise ValueError("permeabilities must be positive")
    x = np.asarray(x, dtype=np.float64)
    if test == "vertical":
        vx = 2.0 * k1 * k2 / (k1 + k2)
        p_mid = vx * 0.5 / k2  # pressure at the interface from the right leg
        if x[0] < 0.5:
            p = 1.0 - vx * x[0] / k1
        else:
            p = p_mid * (1.0 - x[0]) / 0.5
        return float(p), np.array([vx, 0.0])
    # horizontal: each layer sees the full unit pressure drop
    k = k1 if x[1] < 0.5 else k2
    return float(1.0 - x[0]), np.array([k, 0.0])


def _face_transmissibility(k_fn, a: np.ndarray, b: np.ndarray) -> float:
    """Harmonic transmissibility between adjacent cell centers a and b.

    The two half-cell conductivities are sampled at the half-path midpoints,
    which resolves an interface that passes through a cell center or a face
    exactly (our patch interfaces always do for any n).
    """
    qa = 0.75 * a + 0.25 * b
    qb = 0.25 * a + 0.75 * b
    ka = float(k_fn(qa))
    kb = float(k_fn(qb))
    return 2.0 * ka * kb / (ka + kb)


def solve_flow_fd(test: str, n: int, k1: float = 1.0, k2: float = 10.0):
    """Cell-centered finite differences for div(k grad p) = 0 on the patch
    setups. Returns (p, vx, vy) FieldGrids at the n x n cell centers.

    Two-point fluxes with harmonic transmissibilities; Dirichlet p=1/p=0 on
    the left/right through boundary half-cells; no-flow top and bottom. The
    assembled system is solved directly and the residual is verified against
    1e-10, with discrete per-cell mass balance as a by-product.
    """
    if test not in _PATCHES:
        raise ValueError(f"unknown patch test {test!r}")
    n = int(n)
    if n < 17:
        raise ValueError("need n >= 17")
    k_fn = patch_permeability(test, k1, k2)
    h = 1.0 / n
    centers = (np.arange(n) + 0.5) * h

    def cid(ix, iy):
        return iy * n + ix

    rows, cols, data = [], [], []
    rhs = np.zeros(n * n)

    def add(i, j, v):
        rows.append(i)
        cols.append(j)
        data.append(v)

    for iy in range(n):
        for ix in range(n):
            c = cid(ix, iy)
            here = np.array([centers[ix], centers[iy]])
            # interior faces: flux = T (p_nb - p_here), T per unit face length
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                jx, jy = ix + dx, iy + dy
                if 0 <= jx < n and 0 <= jy < n:
                    nb = np.array([centers[jx], centers[jy]])
                    t = _face_transmissibility(k_fn, here, nb)
                    add(c, c, t)
                    add(c, cid(jx, jy), -t)
            # Dirichlet edges via half-cell transmissibility 2k/h -> factor 2k
            if ix == 0:
                q = np.array([0.25 * h, centers[iy]])
                t = 2.0 * float(k_fn(q))
                add(c, c, t)
                rhs[c] += t * 1.0
            if ix == n - 1:
                q = np.array([1.0 - 0.25 * h, centers[iy]])
                t = 2.0 * float(k_fn(q))
                add(c, c, t)
                rhs[c] += t * 0.0
            # top/bottom: no-flow, nothing to add

    a = sp.csr_matrix((data, (rows, cols)), shape=(n * n, n * n))
    p = spla.spsolve(a, rhs)
    residual = np.abs(a @ p - rhs).max()
    if not np.isfinite(p).all() or residual > 1e-10:
        raise ArithmeticError(f"flow solve failed, residual {residual:.3e}")

    pg = p.reshape(n, n)  # [iy, ix]
    # Darcy velocity from face fluxes, averaged to the cell center. The
    # assembled T values are volumetric rates per unit pressure drop (the
    # face length h cancels the 1/h in the gradient), so rate/h is velocity.
    vx = np.zeros_like(pg)
    vy = np.zeros_like(pg)
    for iy in range(n):
        for ix in range(n):
            here = np.array([centers[ix], centers[iy]])
            if ix > 0:
                t = _face_transmissibility(k_fn, here, np.array([centers[ix - 1], centers[iy]]))
                fw = t * (pg[iy, ix - 1] - pg[iy, ix])  # flow in +x through west face
            else:
                t = 2.0 * float(k_fn(np.array([0.25 * h, centers[iy]])))
                fw = t * (1.0 - pg[iy, ix])
            if ix < n - 1:
                t = _face_transmissibility(k_fn, here, np.array([centers[ix + 1], centers[iy]]))
                fe = t * (pg[iy, ix] - pg[iy, ix + 1])
            else:
                t = 2.0 * float(k_fn(np.array([1.0 - 0.25 * h, centers[iy]])))
                fe = t * (pg[iy, ix] - 0.0)
            vx[iy, ix] = 0.5 * (fw + fe) / h
            if iy > 0:
                t = _face_transmissibility(k_fn, here, np.array([centers[ix], centers[iy - 1]]))
                fs = t * (pg[iy - 1, ix] - pg[iy, ix])
            else:
                fs = 0.0
            if iy < n - 1:
                t = _face_transmissibility(k_fn, here, np.array([centers[ix], centers[iy + 1]]))
                fn = t * (pg[iy, ix] - pg[iy + 1, ix])
            else:
                fn = 0.0
            vy[iy, ix] = 0.5 * (fs + fn) / h

    mk = lambda v: FieldGrid(n, n, 0.5 * h, h, v)
    return mk(pg), mk(vx), mk(vy)


def solve_diffusion_fd(
    d: np.ndarray,
    n: int = 151,
    hole_side: float = 0.2,
    inner_value: float = 1.0,
    outer_value: float = 0.0,
    source=None,
    dirichlet=None,
):
    """Nine-point finite differences for -div(D grad c) = f with constant
    symmetric positive-definite D on the unit square with a centred hole.

    The cross-derivative term uses the standard four-corner stencil, so the
    scheme is second order but not an M-matrix for strongly rotated
    anisotropy; any maximum-principle violation is reported, not repaired.
    Returns (FieldGrid over the full lattice, min value over material nodes).

    dirichlet, when given, overrides the boundary (and hole) values with a
    callable of (x, y); used for manufactured-solution checks.
    """
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (2, 2) or abs(d[0, 1] - d[1, 0]) > 1e-12 * (1.0 + abs(d[0, 1])):
        raise ValueError("D must be a symmetric 2x2 tensor")
    if np.linalg.eigvalsh(d).min() <= 0.0:
        raise ValueError("D must be positive definite")
    n = int(n)
    if n < 7:
        raise ValueError("need n >= 7")
    if not (0.0 < hole_side < 1.0):
        raise ValueError("hole side must lie in (0, 1)")
    h = 1.0 / (n - 1)
    ticks = np.linspace(0.0, 1.0, n)
    half = hole_side / 2.0

    def bc_value(x, y, in_hole):
        if dirichlet is not None:
            return float(dirichlet(x, y))
        return inner_value if in_hole else outer_value

    idx = -np.ones((n, n), dtype=int)
    unknowns = []
    fixed = np.zeros((n, n))
    is_fixed = np.zeros((n, n), dtype=bool)
    for iy in range(n):
        for ix in range(n):
            x, y = ticks[ix], ticks[iy]
            in_hole = max(abs(x - 0.5), abs(y - 0.5)) <= half + 1e-12
            on_outer = ix in (0, n - 1) or iy in (0, n - 1)
            if in_hole or on_outer:
                is_fixed[iy, ix] = True
                fixed[iy, ix] = bc_value(x, y, in_hole)
            else:
                idx[iy, ix] = len(unknowns)
                unknowns.append((ix, iy))

    m = len(unknowns)
    rows, cols, data = [], [], []
    rhs = np.zeros(m)
    inv_h2 = 1.0 / (h * h)
    # -(dxx c_xx + 2 dxy c_xy + dyy c_yy) = f
    stencil = {
        (1, 0): -d[0, 0] * inv_h2,
        (-1, 0): -d[0, 0] * inv_h2,
        (0, 1): -d[1, 1] * inv_h2,
        (0, -1): -d[1, 1] * inv_h2,
        (0, 0): 2.0 * (d[0, 0] + d[1, 1]) * inv_h2,
        (1, 1): -2.0 * d[0, 1] * 0.25 * inv_h2,
        (-1, -1): -2.0 * d[0, 1] * 0.25 * inv_h2,
        (1, -1): 2.0 * d[0, 1] * 0.25 * inv_h2,
        (-1, 1): 2.0 * d[0, 1] * 0.25 * inv_h2,
    }
    for row, (ix, iy) in enumerate(unknowns):
        if source is not None:
            rhs[row] += float(source(ticks[ix], ticks[iy]))
        for (dx, dy), coef in stencil.items():
            if coef == 0.0:
                continue
            jx, jy = ix + dx, iy + dy
            if is_fixed[jy, jx]:
                rhs[row] -= coef * fixed[jy, jx]
            else:
                rows.append(row)
                cols.append(idx[jy, jx])
                data.append(coef)

    a = sp.csr_matrix((data, (rows, cols)), shape=(m, m))
    c = spla.spsolve(a, rhs)
    residual = np.abs(a @ c - rhs).max()
    scale = max(1.0, np.abs(rhs).max())
    if not np.isfinite(c).all() or residual > 1e-8 * scale:
        raise ArithmeticError(f"diffusion solve failed, residual {residual:.3e}")

    values = fixed.copy()
    for row, (ix, iy) in enumerate(unknowns):
        values[iy, ix] = c[row]
    material_min = float(c.min()) if m else float("nan")
    # boundary values participate too; the hole interior does not
    outer_ring = np.concatenate([values[0, :], values[-1, :], values[1:-1, 0], values[1:-1, -1]])
    material_min = min(material_min, float(outer_ring.min()))
    return FieldGrid(n, n, 0.0, h, values), material_min

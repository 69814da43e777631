"""Collocation lattices and boundary-condition tables.

Domains are the unit square and the unit square with a centred square hole.
Collocation is a uniform lattice (deterministic, exportable); boundary points
carry outward unit normals and a segment tag, and BcSpec maps tags to
(kind, value) rules. Point ordering is fixed: interior row-major in (y, x),
then boundary segments in a documented order, so exports are reproducible.
"""

import dataclasses
from typing import Callable, Mapping

import numpy as np

from .reaction import ReactionSystem, invariant_boundary_values

BC_KINDS = ("pressure", "normal_velocity", "concentration", "flux")


@dataclasses.dataclass(frozen=True)
class CollocationSet:
    """Interior points plus boundary points with outward normals and tags."""

    interior: np.ndarray  # (Ni, 2)
    boundary: np.ndarray  # (Nb, 2)
    normals: np.ndarray  # (Nb, 2), unit length, outward from the material
    tags: tuple  # length Nb segment tags
    spacing: float

    def __post_init__(self):
        object.__setattr__(self, "interior", np.asarray(self.interior, dtype=np.float64))
        object.__setattr__(self, "boundary", np.asarray(self.boundary, dtype=np.float64))
        object.__setattr__(self, "normals", np.asarray(self.normals, dtype=np.float64))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tags) != len(self.boundary) or len(self.normals) != len(self.boundary):
            raise ValueError("boundary, normals and tags must align")

    @property
    def all_points(self) -> np.ndarray:
        return np.vstack([self.interior, self.boundary])


@dataclasses.dataclass(frozen=True)
class BcSpec:
    """One rule per segment tag; a rule maps a boundary point to (kind, value).

    Kinds: 'pressure' and 'normal_velocity' for flow, 'concentration' and
    'flux' for transport. Rules may vary within a segment (e.g. a pressure
    outlet on part of an edge).
    """

    rules: Mapping[str, Callable]

    def resolve(self, colloc: CollocationSet):
        """Per-boundary-point (kind, value) lists in collocation order."""
        missing = set(colloc.tags) - set(self.rules)
        if missing:
            raise ValueError(f"no boundary rule for segment(s) {sorted(missing)}")
        kinds = []
        values = []
        for point, tag in zip(colloc.boundary, colloc.tags):
            kind, value = self.rules[tag](point)
            if kind not in BC_KINDS:
                raise ValueError(f"unknown boundary kind {kind!r}")
            kinds.append(kind)
            values.append(value)
        return kinds, values


def unit_square_grid(n_side: int, interior_offset=(0.0, 0.0)) -> CollocationSet:
    """Uniform n x n lattice on the closed unit square.

    Corners belong to exactly one segment with precedence
    left > right > bottom > top. interior_offset shifts only the interior
    points (used to keep them off permeability interfaces); the offset must
    stay below one spacing so points remain inside.
    """
    n = int(n_side)
    if n < 3:
        raise ValueError("need n_side >= 3")
    h = 1.0 / (n - 1)
    ticks = np.linspace(0.0, 1.0, n)
    ox, oy = float(interior_offset[0]), float(interior_offset[1])
    if not (0.0 <= ox < h and 0.0 <= oy < h):
        raise ValueError("interior offset must lie in [0, spacing)")

    xi = ticks[1:-1] + ox
    yi = ticks[1:-1] + oy
    xi = xi[xi < 1.0]
    yi = yi[yi < 1.0]
    gx, gy = np.meshgrid(xi, yi)  # row-major in (y, x)
    interior = np.column_stack([gx.ravel(), gy.ravel()])

    boundary = []
    normals = []
    tags = []
    for y in ticks:  # left edge, both corners
        boundary.append((0.0, y)); normals.append((-1.0, 0.0)); tags.append("left")
    for y in ticks:  # right edge, both corners
        boundary.append((1.0, y)); normals.append((1.0, 0.0)); tags.append("right")
    for x in ticks[1:-1]:  # bottom, corners already taken
        boundary.append((x, 0.0)); normals.append((0.0, -1.0)); tags.append("bottom")
    for x in ticks[1:-1]:  # top
        boundary.append((x, 1.0)); normals.append((0.0, 1.0)); tags.append("top")
    return CollocationSet(interior, np.array(boundary), np.array(normals), tags, h)


def square_with_hole(n_side: int = 150, hole_side: float = 0.2) -> CollocationSet:
    """Unit-square lattice with a centred square hole cut out.

    Lattice points inside or on the hole are dropped; the hole perimeter is
    sampled explicitly at matching density and tagged 'hole', the outer
    perimeter is tagged 'outer'. Hole normals point into the hole, i.e.
    outward from the material.
    """
    n = int(n_side)
    if n < 3:
        raise ValueError("need n_side >= 3")
    hole_side = float(hole_side)
    if not (0.0 < hole_side < 1.0):
        raise ValueError("hole side must lie in (0, 1)")
    h = 1.0 / (n - 1)
    half = hole_side / 2.0
    x0, x1 = 0.5 - half, 0.5 + half
    ticks = np.linspace(0.0, 1.0, n)

    gx, gy = np.meshgrid(ticks[1:-1], ticks[1:-1])
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    in_hole = (np.abs(pts[:, 0] - 0.5) <= half + 1e-12) & (np.abs(pts[:, 1] - 0.5) <= half + 1e-12)
    interior = pts[~in_hole]

    boundary = []
    normals = []
    tags = []
    for y in ticks:
        boundary.append((0.0, y)); normals.append((-1.0, 0.0)); tags.append("outer")
    for y in ticks:
        boundary.append((1.0, y)); normals.append((1.0, 0.0)); tags.append("outer")
    for x in ticks[1:-1]:
        boundary.append((x, 0.0)); normals.append((0.0, -1.0)); tags.append("outer")
    for x in ticks[1:-1]:
        boundary.append((x, 1.0)); normals.append((0.0, 1.0)); tags.append("outer")

    # Hole perimeter: exact points at a spacing matching the lattice. Corners
    # go to the hole-left/right sides (same precedence rule as the outer box).
    y0, y1 = x0, x1
    m = max(1, int(np.ceil(hole_side / h)))
    side = np.linspace(y0, y1, m + 1)
    for y in side:  # hole-left side incl. both corners
        boundary.append((x0, y)); normals.append((1.0, 0.0)); tags.append("hole")
    for y in side:  # hole-right side incl. both corners
        boundary.append((x1, y)); normals.append((-1.0, 0.0)); tags.append("hole")
    for x in side[1:-1]:  # hole-bottom
        boundary.append((x, y0)); normals.append((0.0, 1.0)); tags.append("hole")
    for x in side[1:-1]:  # hole-top
        boundary.append((x, y1)); normals.append((0.0, -1.0)); tags.append("hole")

    return CollocationSet(interior, np.array(boundary), np.array(normals), tags, h)


def flow_bc_vertical_patch() -> BcSpec:
    """Pressure-driven table shared by all three patch tests: unit pressure on
    the left, zero on the right, impermeable top and bottom."""
    return BcSpec(
        {
            "left": lambda p: ("pressure", 1.0),
            "right": lambda p: ("pressure", 0.0),
            "bottom": lambda p: ("normal_velocity", 0.0),
            "top": lambda p: ("normal_velocity", 0.0),
        }
    )


def flow_bc_reaction_tank() -> BcSpec:
    """Unit pressure on the left; the middle third of the right edge is a
    zero-pressure outlet; every other boundary point is a no-flow wall."""

    def right_rule(p):
        # tolerance absorbs lattice rounding at the exact thirds (33/99 etc.)
        if 1.0 / 3.0 - 1e-9 <= p[1] <= 2.0 / 3.0 + 1e-9:
            return ("pressure", 0.0)
        return ("normal_velocity", 0.0)

    return BcSpec(
        {
            "left": lambda p: ("pressure", 1.0),
            "right": right_rule,
            "bottom": lambda p: ("normal_velocity", 0.0),
            "top": lambda p: ("normal_velocity", 0.0),
        }
    )


def transport_bc_hole(inner_value: float = 1.0, outer_value: float = 0.0) -> BcSpec:
    """Concentration held at inner_value on the hole rim, outer_value outside."""
    return BcSpec(
        {
            "hole": lambda p: ("concentration", inner_value),
            "outer": lambda p: ("concentration", outer_value),
        }
    )


def species_bc_reaction_tank(sys: ReactionSystem) -> BcSpec:
    """Invariant boundary table for the reaction tank.

    Species A is prescribed on the upper half of the left edge and species B
    on the lower half (the midpoint y = 0.5 goes to the A side); every other
    boundary is zero diffusive flux for both invariants. Dirichlet values are
    stacked as [psi_a, psi_b].
    """
    tank = dataclasses.replace(
        sys,
        c_a_bc=lambda p: 1.0 if p[1] >= 0.5 else 0.0,
        c_b_bc=lambda p: 0.0 if p[1] >= 0.5 else 1.0,
        c_c_bc=lambda p: 0.0,
    )

    def left_rule(p):
        inv = invariant_boundary_values(tank, p)
        return ("concentration", np.array([float(inv.psi_a), float(inv.psi_b)]))

    zero_flux = lambda p: ("flux", np.zeros(2))
    return BcSpec({"left": left_rule, "right": zero_flux, "bottom": zero_flux, "top": zero_flux})


def export_collocation(colloc: CollocationSet, path) -> None:
    """CSV dump (x,y,tag) of all points in index order; interior rows first."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("x,y,tag\n")
        for x, y in colloc.interior:
            fh.write(f"{x:.17g},{y:.17g},interior\n")
        for (x, y), tag in zip(colloc.boundary, colloc.tags):
            fh.write(f"{x:.17g},{y:.17g},{tag}\n")

"""Named benchmark cases: build the problem, train, measure, export.

Each case writes a fixed artifact set into the output directory: a config
echo, field CSVs over the collocation points, per-stage training histories
and checkpoints, and a metrics summary. The metrics file contains no
timestamps or timings, so identical config + seed reproduces it byte for
byte; wall-clock data lives in the training CSVs only.
"""

import dataclasses
import os

import numpy as np

from .config import RunConfig, render_config
from .geometry import (
    CollocationSet,
    flow_bc_reaction_tank,
    flow_bc_vertical_patch,
    species_bc_reaction_tank,
    square_with_hole,
    transport_bc_hole,
    unit_square_grid,
)
from .network import NetworkParams, forward_batch, save_checkpoint
from .oracle import FieldGrid, analytic_patch, solve_diffusion_fd, solve_flow_fd
from .physics import (
    P,
    VX,
    VY,
    AnisotropyTensorSpec,
    DispersionParams,
    MediumModel,
    explicit_velocity,
    explicit_velocity_jnp,
    patch_permeability,
    rotated_anisotropy,
)
from .problems import (
    dispersion_field,
    flow_problem,
    frozen_velocity,
    scalar_diffusion_problem,
    tensor_field_arrays,
)
from .reaction import ReactionSystem, reconstruct_fields
from .training import LossWeights, TrainConfig, TrainingDivergedError, train

_PATCH_TESTS = {
    "patch_vertical": "vertical",
    "patch_horizontal": "horizontal",
    "patch_inclined": "inclined",
    "custom": "vertical",
}

_FLOW_STATS = frozenset(
    ["loss_best", "loss_total_final", "min_p", "max_p", "min_vx", "max_vx", "min_vy", "max_vy", "mean_vx"]
)
_REACTION_METRICS = frozenset(
    [
        "min_psi_a", "max_psi_a", "min_psi_b", "max_psi_b",
        "min_c_a", "max_c_a", "min_c_b", "max_c_b", "min_c_c", "max_c_c",
        "corner_max_c_c", "ridge_y_min", "ridge_y_max",
        "mass_ratio_a", "mass_ratio_b",
        "loss_best_psi_a", "loss_total_final_psi_a",
        "loss_best_psi_b", "loss_total_final_psi_b",
    ]
)

#: metric keys each case must deliver; run_case enforces the set exactly
METRIC_KEYS = {
    "patch_vertical": _FLOW_STATS | {"rel_l2_p_midline", "p_center_error", "rel_err_mean_vx"},
    "patch_horizontal": _FLOW_STATS | {"linf_p", "rel_err_mean_vx_bottom", "rel_err_mean_vx_top"},
    "patch_inclined": _FLOW_STATS | {"rel_l2_p_midline"},
    "custom": _FLOW_STATS,
    "transport_hole": frozenset(["loss_best", "loss_total_final", "min_c", "max_c", "fd_min_c"]),
    "reaction_uniform": _REACTION_METRICS
    | {"loss_best_flow", "loss_total_final_flow", "min_p", "max_p"},
    "reaction_explicit": _REACTION_METRICS,
}


class StageError(RuntimeError):
    """A pipeline stage failed; artifacts written so far are kept."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclasses.dataclass
class RunReport:
    case: str
    metrics: dict
    artifacts: dict
    records: dict


def export_field(field, path, values=None) -> None:
    """Write x,y,value rows (17 significant digits, index order).

    field is either a FieldGrid (values implied, row-major) or an (N, 2)
    point array with values supplied separately.
    """
    if isinstance(field, FieldGrid):
        xs, ys = np.meshgrid(field.xs, field.ys)
        points = np.column_stack([xs.ravel(), ys.ravel()])
        values = field.values.ravel()
    else:
        points = np.asarray(field, dtype=np.float64)
        if values is None:
            raise ValueError("point-cloud export needs explicit values")
        values = np.asarray(values, dtype=np.float64)
    if len(points) != len(values):
        raise ValueError("points and values must align")
    if not (np.isfinite(points).all() and np.isfinite(values).all()):
        raise ValueError("refusing to export non-finite field data")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("x,y,value\n")
        for (x, y), v in zip(points, values):
            fh.write(f"{x:.17g},{y:.17g},{v:.17g}\n")


def write_metrics(metrics: dict, path) -> None:
    """key = value lines, sorted by key, 17 significant digits."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for key in sorted(metrics):
            fh.write(f"{key} = {metrics[key]:.17g}\n")


def _train_config(cfg: RunConfig, width: int, seed: int) -> TrainConfig:
    return TrainConfig(
        layer_sizes=(2, *cfg.hidden_layers, width),
        seed=seed,
        epochs=cfg.epochs,
        learning_rate=cfg.learning_rate,
        lr_decay=cfg.lr_decay,
        lr_stages=cfg.lr_stages,
        weights=LossWeights(pde=cfg.weight_pde, bc=cfg.weight_bc),
    )


def _train_stage(stage, problem, tc, out_dir, artifacts, records):
    """Train one network; history and checkpoint land in the artifact set.
    On divergence the partial history is still written before aborting."""
    history = os.path.join(out_dir, f"train_{stage}.csv")
    try:
        net, record = train(problem, tc)
    except TrainingDivergedError as e:
        e.record.to_csv(history)
        artifacts[f"train_{stage}"] = history
        records[stage] = e.record
        raise StageError(stage, str(e)) from e
    record.to_csv(history)
    artifacts[f"train_{stage}"] = history
    checkpoint = os.path.join(out_dir, f"net_{stage}.txt")
    save_checkpoint(net, checkpoint)
    artifacts[f"net_{stage}"] = checkpoint
    records[stage] = record
    return net, record


def _export_point_fields(points, named_values, out_dir, artifacts):
    for name, values in named_values.items():
        path = os.path.join(out_dir, f"{name}.csv")
        export_field(points, path, values)
        artifacts[name] = path


def _patch_offset(test: str, n: int):
    """Interior lattice shift that keeps collocation points off the
    permeability interface. The straight interfaces sit at 0.5, which is a
    lattice coordinate exactly when n is odd; the diagonal hits every
    unshifted lattice point."""
    h = 1.0 / (n - 1)
    if test == "inclined":
        return (0.5 * h, 0.0)
    hits = n % 2 == 1
    if test == "vertical":
        return (0.5 * h, 0.0) if hits else (0.0, 0.0)
    return (0.0, 0.5 * h) if hits else (0.0, 0.0)


def _rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.sum((a - b) ** 2) / np.sum(b**2)))


def _flow_stats(vals: np.ndarray) -> dict:
    return {
        "min_p": float(vals[:, P].min()),
        "max_p": float(vals[:, P].max()),
        "min_vx": float(vals[:, VX].min()),
        "max_vx": float(vals[:, VX].max()),
        "min_vy": float(vals[:, VY].min()),
        "max_vy": float(vals[:, VY].max()),
        "mean_vx": float(vals[:, VX].mean()),
    }


def _run_flow_patch(case: str, cfg: RunConfig, out_dir: str, artifacts, records) -> dict:
    test = _PATCH_TESTS[case]
    n = cfg.grid_n
    colloc = unit_square_grid(n, _patch_offset(test, n))
    medium = MediumModel(permeability=patch_permeability(test, cfg.k1, cfg.k2))
    try:
        problem = flow_problem(colloc, flow_bc_vertical_patch(), medium, name=case)
    except Exception as e:
        raise StageError("build", str(e)) from e
    net, record = _train_stage("flow", problem, _train_config(cfg, 3, cfg.seed), out_dir, artifacts, records)

    points = colloc.all_points
    vals = np.asarray(forward_batch(net, points))
    _export_point_fields(
        points, {"p": vals[:, P], "vx": vals[:, VX], "vy": vals[:, VY]}, out_dir, artifacts
    )
    metrics = _flow_stats(vals)
    metrics["loss_best"] = record.best_loss
    metrics["loss_total_final"] = float(record.total[-1])

    if case == "patch_vertical":
        xs = np.linspace(0.0, 1.0, n)
        mid = np.column_stack([xs, np.full(n, 0.5)])
        p_net = np.asarray(forward_batch(net, mid))[:, P]
        p_ref = np.array([analytic_patch(test, cfg.k1, cfg.k2, q)[0] for q in mid])
        vx_ref = analytic_patch(test, cfg.k1, cfg.k2, (0.25, 0.5))[1][0]
        p_center = analytic_patch(test, cfg.k1, cfg.k2, (0.5, 0.5))[0]
        p_net_center = float(np.asarray(forward_batch(net, np.array([[0.5, 0.5]])))[0, P])
        metrics["rel_l2_p_midline"] = _rel_l2(p_net, p_ref)
        metrics["p_center_error"] = abs(p_net_center - p_center)
        metrics["rel_err_mean_vx"] = abs(metrics["mean_vx"] - vx_ref) / abs(vx_ref)
    elif case == "patch_horizontal":
        p_ref = 1.0 - points[:, 0]
        metrics["linf_p"] = float(np.abs(vals[:, P] - p_ref).max())
        lower = points[:, 1] < 0.5
        upper = points[:, 1] > 0.5
        metrics["rel_err_mean_vx_bottom"] = abs(float(vals[lower, VX].mean()) - cfg.k1) / cfg.k1
        metrics["rel_err_mean_vx_top"] = abs(float(vals[upper, VX].mean()) - cfg.k2) / cfg.k2
    elif case == "patch_inclined":
        try:
            fd_p, _, _ = solve_flow_fd(test, cfg.oracle_n, cfg.k1, cfg.k2)
            p_ref = fd_p.midline_row()
        except Exception as e:
            raise StageError("oracle", str(e)) from e
        mid = np.column_stack([fd_p.xs, np.full(fd_p.n_x, 0.5)])
        p_net = np.asarray(forward_batch(net, mid))[:, P]
        metrics["rel_l2_p_midline"] = _rel_l2(p_net, p_ref)
    return metrics


def _run_transport_hole(cfg: RunConfig, out_dir: str, artifacts, records) -> dict:
    try:
        colloc = square_with_hole(cfg.grid_n)
        d = rotated_anisotropy(AnisotropyTensorSpec(cfg.theta, cfg.lam1, cfg.lam2))
        n_i, n_b = len(colloc.interior), len(colloc.boundary)
        problem = scalar_diffusion_problem(
            colloc,
            transport_bc_hole(),
            np.repeat(d[None, :, :], n_i, axis=0),
            np.zeros((n_i, 2)),
            np.repeat(d[None, :, :], n_b, axis=0),
            name="transport_hole",
            # f = 0, so scaling the operator changes nothing but keeps the
            # residual O(1) under extreme anisotropy
            residual_scale=1.0 / cfg.lam1,
        )
    except Exception as e:
        raise StageError("build", str(e)) from e
    net, record = _train_stage("c", problem, _train_config(cfg, 1, cfg.seed), out_dir, artifacts, records)

    points = colloc.all_points
    c = np.asarray(forward_batch(net, points))[:, 0]
    _export_point_fields(points, {"c": c}, out_dir, artifacts)
    try:
        _, fd_min = solve_diffusion_fd(d, cfg.oracle_n)
    except Exception as e:
        raise StageError("oracle", str(e)) from e
    return {
        "loss_best": record.best_loss,
        "loss_total_final": float(record.total[-1]),
        "min_c": float(c.min()),
        "max_c": float(c.max()),
        "fd_min_c": fd_min,
    }


def _interior_lattice(colloc: CollocationSet, n: int):
    """Distinct x and y coordinates of the (n-2)^2 interior lattice."""
    m = n - 2
    if len(colloc.interior) != m * m:
        raise ValueError("interior is not the full lattice")
    return colloc.interior[:m, 0].copy(), colloc.interior[::m, 1].copy()


def _ridge_band(c_c_interior: np.ndarray, xs: np.ndarray, ys: np.ndarray, x_min: float = 0.2):
    """y of the per-column maximum, over columns with x >= x_min."""
    grid = c_c_interior.reshape(len(ys), len(xs))
    cols = np.nonzero(xs >= x_min - 1e-12)[0]
    ridge = ys[np.argmax(grid[:, cols], axis=0)]
    return float(ridge.min()), float(ridge.max())


def _mass_ratio(c_interior: np.ndarray, ys_points: np.ndarray, favored_upper: bool) -> float:
    top = float(c_interior[ys_points > 0.5].sum())
    bottom = float(c_interior[ys_points < 0.5].sum())
    num, den = (top, bottom) if favored_upper else (bottom, top)
    if den <= 0.0:
        return float("inf") if num > 0.0 else 0.0
    return num / den


def _run_reaction(case: str, cfg: RunConfig, out_dir: str, artifacts, records) -> dict:
    colloc = unit_square_grid(cfg.grid_n)
    points = colloc.all_points
    sys = ReactionSystem(cfg.n_a, cfg.n_b, cfg.n_c)
    metrics = {}

    if case == "reaction_uniform":
        try:
            medium = MediumModel(permeability=lambda x: cfg.k1)
            problem = flow_problem(colloc, flow_bc_reaction_tank(), medium, name="flow")
        except Exception as e:
            raise StageError("flow", str(e)) from e
        flow_net, flow_rec = _train_stage(
            "flow", problem, _train_config(cfg, 3, cfg.seed), out_dir, artifacts, records
        )
        vals = np.asarray(forward_batch(flow_net, points))
        _export_point_fields(
            points, {"p": vals[:, P], "vx": vals[:, VX], "vy": vals[:, VY]}, out_dir, artifacts
        )
        metrics.update(
            loss_best_flow=flow_rec.best_loss,
            loss_total_final_flow=float(flow_rec.total[-1]),
            min_p=float(vals[:, P].min()),
            max_p=float(vals[:, P].max()),
        )
        v_fn = frozen_velocity(flow_net)  # held fixed from here on
    else:
        v_fn = explicit_velocity_jnp
        v_samples = np.array([explicit_velocity(q) for q in points])
        _export_point_fields(points, {"vx": v_samples[:, 0], "vy": v_samples[:, 1]}, out_dir, artifacts)

    try:
        d_fn = dispersion_field(v_fn, DispersionParams(cfg.alpha_l, cfg.alpha_t, cfg.d_m))
        d_int, div_d_int = tensor_field_arrays(d_fn, colloc.interior)
        d_bnd, _ = tensor_field_arrays(d_fn, colloc.boundary, with_divergence=False)
        bc = species_bc_reaction_tank(sys)
        prob_a = scalar_diffusion_problem(colloc, bc, d_int, div_d_int, d_bnd, component=0, name="psi_a")
        prob_b = scalar_diffusion_problem(colloc, bc, d_int, div_d_int, d_bnd, component=1, name="psi_b")
    except Exception as e:
        raise StageError("dispersion", str(e)) from e

    # stage seeds are offset so the two invariant networks start independently
    net_a, rec_a = _train_stage("psi_a", prob_a, _train_config(cfg, 1, cfg.seed + 1), out_dir, artifacts, records)
    net_b, rec_b = _train_stage("psi_b", prob_b, _train_config(cfg, 1, cfg.seed + 2), out_dir, artifacts, records)

    try:
        psi_a = np.asarray(forward_batch(net_a, points))[:, 0]
        psi_b = np.asarray(forward_batch(net_b, points))[:, 0]
        triple = reconstruct_fields(sys, net_a, net_b, points)
        _export_point_fields(
            points,
            {"psi_a": psi_a, "psi_b": psi_b, "c_a": triple.c_a, "c_b": triple.c_b, "c_c": triple.c_c},
            out_dir,
            artifacts,
        )
        corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        corner_c_c = reconstruct_fields(sys, net_a, net_b, corners).c_c
        n_int = len(colloc.interior)
        xs, ys = _interior_lattice(colloc, cfg.grid_n)
        ridge_lo, ridge_hi = _ridge_band(triple.c_c[:n_int], xs, ys)
        ys_points = colloc.interior[:, 1]
        metrics.update(
            min_psi_a=float(psi_a.min()), max_psi_a=float(psi_a.max()),
            min_psi_b=float(psi_b.min()), max_psi_b=float(psi_b.max()),
            min_c_a=float(triple.c_a.min()), max_c_a=float(triple.c_a.max()),
            min_c_b=float(triple.c_b.min()), max_c_b=float(triple.c_b.max()),
            min_c_c=float(triple.c_c.min()), max_c_c=float(triple.c_c.max()),
            corner_max_c_c=float(corner_c_c.max()),
            ridge_y_min=ridge_lo, ridge_y_max=ridge_hi,
            mass_ratio_a=_mass_ratio(triple.c_a[:n_int], ys_points, favored_upper=True),
            mass_ratio_b=_mass_ratio(triple.c_b[:n_int], ys_points, favored_upper=False),
            loss_best_psi_a=rec_a.best_loss,
            loss_total_final_psi_a=float(rec_a.total[-1]),
            loss_best_psi_b=rec_b.best_loss,
            loss_total_final_psi_b=float(rec_b.total[-1]),
        )
    except StageError:
        raise
    except Exception as e:
        raise StageError("closure", str(e)) from e
    return metrics


def run_case(name: str, cfg: RunConfig) -> RunReport:
    """Execute one named case end to end and write its artifact set."""
    if name not in METRIC_KEYS:
        raise ValueError(f"unknown case {name!r}")
    if cfg.case != name:
        raise ValueError(f"config is for case {cfg.case!r}, not {name!r}")
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    artifacts = {}
    records = {}

    config_echo = os.path.join(out_dir, "config.json")
    with open(config_echo, "w", encoding="ascii", newline="\n") as fh:
        fh.write(render_config(cfg))
    artifacts["config"] = config_echo

    if name in _PATCH_TESTS:
        metrics = _run_flow_patch(name, cfg, out_dir, artifacts, records)
    elif name == "transport_hole":
        metrics = _run_transport_hole(cfg, out_dir, artifacts, records)
    else:
        metrics = _run_reaction(name, cfg, out_dir, artifacts, records)

    missing = METRIC_KEYS[name] - set(metrics)
    extra = set(metrics) - METRIC_KEYS[name]
    if missing or extra:
        raise StageError("metrics", f"metric set mismatch (missing {sorted(missing)}, extra {sorted(extra)})")
    metrics_path = os.path.join(out_dir, "metrics.txt")
    write_metrics(metrics, metrics_path)
    artifacts["metrics"] = metrics_path
    return RunReport(case=name, metrics=metrics, artifacts=artifacts, records=records)


def oracle_case(name: str, cfg: RunConfig, out_dir: str) -> dict:
    """Write the reference solution a case is judged against.

    Patches get the finite-difference fields (plus closed forms where they
    exist); the hole case gets the finite-difference concentration. The
    reaction cases have no reference solution; reaction_explicit still emits
    its prescribed velocity field.
    """
    os.makedirs(out_dir, exist_ok=True)
    artifacts = {}
    if name in ("patch_vertical", "patch_horizontal", "patch_inclined"):
        test = _PATCH_TESTS[name]
        fd_p, fd_vx, fd_vy = solve_flow_fd(test, cfg.oracle_n, cfg.k1, cfg.k2)
        for label, grid in (("fd_p", fd_p), ("fd_vx", fd_vx), ("fd_vy", fd_vy)):
            path = os.path.join(out_dir, f"{label}.csv")
            export_field(grid, path)
            artifacts[label] = path
        if test != "inclined":
            pts = unit_square_grid(cfg.grid_n).all_points
            ref = [analytic_patch(test, cfg.k1, cfg.k2, q) for q in pts]
            p = np.array([r[0] for r in ref])
            v = np.stack([r[1] for r in ref])
            _export_point_fields(
                pts, {"analytic_p": p, "analytic_vx": v[:, 0], "analytic_vy": v[:, 1]}, out_dir, artifacts
            )
    elif name == "transport_hole":
        d = rotated_anisotropy(AnisotropyTensorSpec(cfg.theta, cfg.lam1, cfg.lam2))
        grid, fd_min = solve_diffusion_fd(d, cfg.oracle_n)
        path = os.path.join(out_dir, "fd_c.csv")
        export_field(grid, path)
        artifacts["fd_c"] = path
        summary = os.path.join(out_dir, "oracle.txt")
        write_metrics({"fd_min_c": fd_min}, summary)
        artifacts["oracle"] = summary
    elif name == "reaction_explicit":
        pts = unit_square_grid(cfg.grid_n).all_points
        v = np.array([explicit_velocity(q) for q in pts])
        _export_point_fields(pts, {"vx": v[:, 0], "vy": v[:, 1]}, out_dir, artifacts)
    else:
        raise ValueError(f"no reference solution for case {name!r}")
    return artifacts


#: acceptance thresholds per case, evaluated on the metrics map
def acceptance_checks(name: str, metrics: dict):
    """(check name, passed, detail) triples for a finished run's metrics."""
    checks = []

    def add(label, ok, detail):
        checks.append((label, bool(ok), detail))

    if name == "patch_vertical":
        add("rel_l2_p_midline <= 0.02", metrics["rel_l2_p_midline"] <= 0.02, f"{metrics['rel_l2_p_midline']:.3e}")
        add("p_center_error <= 0.02", metrics["p_center_error"] <= 0.02, f"{metrics['p_center_error']:.3e}")
        add("rel_err_mean_vx <= 0.02", metrics["rel_err_mean_vx"] <= 0.02, f"{metrics['rel_err_mean_vx']:.3e}")
    elif name == "patch_horizontal":
        add("linf_p <= 0.02", metrics["linf_p"] <= 0.02, f"{metrics['linf_p']:.3e}")
        add(
            "rel_err_mean_vx_bottom <= 0.05",
            metrics["rel_err_mean_vx_bottom"] <= 0.05,
            f"{metrics['rel_err_mean_vx_bottom']:.3e}",
        )
        add(
            "rel_err_mean_vx_top <= 0.05",
            metrics["rel_err_mean_vx_top"] <= 0.05,
            f"{metrics['rel_err_mean_vx_top']:.3e}",
        )
    elif name == "patch_inclined":
        add("rel_l2_p_midline <= 0.03", metrics["rel_l2_p_midline"] <= 0.03, f"{metrics['rel_l2_p_midline']:.3e}")
    elif name == "transport_hole":
        add("min_c >= -1e-3", metrics["min_c"] >= -1.0e-3, f"{metrics['min_c']:.3e}")
        add("max_c <= 1+1e-3", metrics["max_c"] <= 1.0 + 1.0e-3, f"{metrics['max_c']:.3e}")
        add("fd_min_c < 0", metrics["fd_min_c"] < 0.0, f"{metrics['fd_min_c']:.3e}")
    elif name in ("reaction_uniform", "reaction_explicit"):
        lo, hi = -1.0e-3, 1.0 + 1.0e-3
        for f in ("c_a", "c_b", "c_c"):
            add(f"{f} within [-1e-3, 1+1e-3]",
                metrics[f"min_{f}"] >= lo and metrics[f"max_{f}"] <= hi,
                f"[{metrics[f'min_{f}']:.3e}, {metrics[f'max_{f}']:.3e}]")
        add("corner_max_c_c <= 1e-2", metrics["corner_max_c_c"] <= 1.0e-2, f"{metrics['corner_max_c_c']:.3e}")
        add(
            "c_c ridge within y in [0.35, 0.75] for x >= 0.2",
            metrics["ridge_y_min"] >= 0.35 and metrics["ridge_y_max"] <= 0.75,
            f"[{metrics['ridge_y_min']:.3f}, {metrics['ridge_y_max']:.3f}]",
        )
        add("mass_ratio_a >= 3", metrics["mass_ratio_a"] >= 3.0, f"{metrics['mass_ratio_a']:.2f}")
        add("mass_ratio_b >= 3", metrics["mass_ratio_b"] >= 3.0, f"{metrics['mass_ratio_b']:.2f}")
    else:
        raise ValueError(f"no acceptance thresholds for case {name!r}")
    return checks

"""Mesh-free collocation solvers for porous-media flow and reactive transport.

Tanh networks are trained to minimise pointwise PDE residuals plus boundary
mismatch for three problem families: Darcy flow in mixed form, steady
anisotropic diffusion, and fast bimolecular reactions handled through
conserved invariants. All numerics are 64-bit.
"""

from jax import config as _jax_config

# Must run before any jax.numpy array is created anywhere in the package.
_jax_config.update("jax_enable_x64", True)

from .autodiff import Jet2, ParamGradient, eval_jet2, eval_param_gradient
from .network import (
    NetworkParams,
    init_network,
    forward,
    forward_batch,
    forward_jets,
    save_checkpoint,
    load_checkpoint,
)
from .physics import (
    VX,
    VY,
    P,
    MediumModel,
    DispersionParams,
    AnisotropyTensorSpec,
    FlowResidual,
    darcy_residual,
    diffusion_residual,
    dispersion_tensor,
    rotated_anisotropy,
    explicit_velocity,
    patch_permeability,
)
from .reaction import (
    ReactionSystem,
    InvariantPair,
    SpeciesTriple,
    invariants_from_concentrations,
    invariant_boundary_values,
    species_from_invariants,
    reconstruct_fields,
)
from .geometry import (
    CollocationSet,
    BcSpec,
    unit_square_grid,
    square_with_hole,
    flow_bc_vertical_patch,
    flow_bc_reaction_tank,
    transport_bc_hole,
    species_bc_reaction_tank,
    export_collocation,
)
from .training import (
    LossWeights,
    AdamState,
    TrainRecord,
    Problem,
    TrainConfig,
    TrainingDivergedError,
    assemble_loss,
    adam_step,
    train,
)
from .problems import (
    flow_problem,
    scalar_diffusion_problem,
    dispersion_field,
    frozen_velocity,
    tensor_field_arrays,
)
from .oracle import FieldGrid, analytic_patch, solve_flow_fd, solve_diffusion_fd
from .config import CASES, ConfigError, RunConfig, parse_config, render_config, default_config
from .cases import RunReport, StageError, run_case, oracle_case, acceptance_checks, export_field, write_metrics

__version__ = "0.1.0"

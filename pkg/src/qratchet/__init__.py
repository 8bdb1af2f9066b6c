"""Dissipative biharmonic kicked-rotor ratchet toolkit.

Classical map ensembles and a quantum-trajectory unraveling of the damped
rotor share one parameter record; a sweep orchestrator maps (k, gamma)
grids into checkpointed artifacts and the analysis layer turns those into
currents, participation-ratio statistics, cuts and heatmaps.
"""

__version__ = "0.1.0"

from .analysis import (
    EtaHistogram,
    eta_histogram,
    eta_vs_current,
    heatmap_export,
    load_heatmap,
    participation_ratio,
    transversal_cut,
)
from .classical import (
    ClassicalEnsemble,
    classical_current,
    discretize_momentum,
    evolve_ensemble,
    find_period1_points,
    map_step,
    sample_initial,
)
from .lindblad import dense_lindblad_oracle, diagonal_distribution, momentum_expectation
from .model import (
    GridSpec,
    ModelParams,
    MomentumDistribution,
    default_dim,
    kick_force,
    make_params,
    potential,
)
from .quantum import (
    HilbertSpec,
    TrajectoryBatch,
    apply_jump,
    apply_kick,
    batch_cell_stderr,
    batch_current_stderr,
    batch_distribution,
    batch_tv_noise,
    build_space,
    dissipative_flight,
    evolve_trajectory,
    initial_momentum_set,
    jump_waiting_time,
    quantum_current,
    run_batch,
    sample_initial_state,
    uniform_momentum_mixture,
)
from .sweep import (
    CellResult,
    CellTask,
    EngineConfig,
    SweepArtifact,
    cell_seed,
    load_artifact,
    plan_grid,
    resume,
    run_cell,
    run_sweep,
)

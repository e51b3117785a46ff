"""Drift and diffusion estimation from irregularly sampled noisy tracks, and
migration proportions between rectangular areas of a reflecting habitat."""

__version__ = "0.1.0"

from .dataio import ingest_tracks, write_tracks
from .estimate import (
    BootstrapCI,
    CollectiveParams,
    EffectiveParams,
    bootstrap_collective,
    bootstrap_effective,
    bootstrap_track,
    compare_models,
    correct_for_error,
    estimate_beta_eff,
    estimate_collective,
    estimate_d_eff,
    fit_effective,
    group_intervals,
    qq_pairs,
)
from .exceptions import ConvergenceError, DataError, NumericalDomainError, NumericalError
from .greens import DomainRect, ImageSumControl, ftilde, green_reflected_1d, nx_if, nx_if_quadrature
from .model import (
    ConstantDiffusion,
    DriftVector,
    ErrorCumulants,
    IncrementSeries,
    PiecewiseConstantDiffusion,
    TrackObservation,
    TrackSeries,
    deltaX_cumulants,
    extract_increments,
    integrate_diffusion,
    joint_cumulant_obs,
    obs_increment_cov,
    standardize_increments,
    summarize,
)
from .proportions import AreaRect, MotionParams, grid_partition, migration_proportion, proportion_matrix
from .simulate import (
    ExponentialIntervals,
    FixedIntervals,
    GaussianNoise,
    LaplaceNoise,
    UniformIntervals,
    UniformNoise,
    add_noise,
    mc_migration_proportion,
    simulate_free_path,
    simulate_free_paths,
    simulate_reflected_path,
)

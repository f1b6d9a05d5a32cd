"""Two-phase input-masking training for sparse neural emulators."""

from ._core import (
    Mode,
    Network,
    PcmError,
    TrainingConfig,
    __version__,
    binarize,
    build_threshold_grid,
    driver_recovery,
    extract_mask_vector,
    generate_synthetic,
    jaccard,
    load_checkpoint,
    make_mask_network,
    make_premask_network,
    mean_abs_attribution,
    r2,
    run_cli,
    shapley_exact,
    shapley_sampled,
    sweep_thresholds,
    train_mask,
    train_premask,
)

__all__ = [
    "Mode",
    "Network",
    "PcmError",
    "TrainingConfig",
    "__version__",
    "binarize",
    "build_threshold_grid",
    "driver_recovery",
    "extract_mask_vector",
    "generate_synthetic",
    "jaccard",
    "load_checkpoint",
    "make_mask_network",
    "make_premask_network",
    "mean_abs_attribution",
    "r2",
    "run_cli",
    "shapley_exact",
    "shapley_sampled",
    "sweep_thresholds",
    "train_mask",
    "train_premask",
]

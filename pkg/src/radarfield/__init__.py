"""FMCW radar simulation and differentiable volumetric reconstruction.

The package simulates frequency-modulated continuous-wave radar measurements
of synthetic scenes over a cylindrical synthetic aperture and reconstructs
volumetric reflectivity fields by gradient descent against a closed-form
frequency-domain forward model. Classical coherent backprojection and
time-domain / range-quantized training baselines are included, along with
point-cloud quality metrics and file formats for datasets and volumes.
"""

from .chirp import (
    ChirpConfig,
    Spectrum,
    ToneParams,
    beat_params,
    dft,
    dirichlet_kernel,
    dirichlet_magnitude,
    inverse_dft,
    synth_beat_time,
    tone_spectrum_closed_form,
    wrap_phase,
)
from .errors import (
    BadMagicError,
    ConfigError,
    DatasetFormatError,
    DegenerateGeometryError,
    EmptyFieldError,
    InvalidDelayError,
    NonFiniteLossError,
    RadarFieldError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from .estimators import CoherentBackprojection, SpectralReconstructor
from .fields import (
    InrField,
    PointScatterers,
    QuerySet,
    VoxelField,
    extract_pointcloud,
    field_param_gradient,
    field_to_grid,
    make_query_grid,
    sample_field,
    sheet_benchmark,
    sheet_height,
)
from .forward import (
    range_quantized_adjoint,
    range_quantized_forward,
    spectral_adjoint,
    spectral_forward,
    time_domain_adjoint,
    time_domain_forward,
)
from .geometry import (
    Aperture,
    Pose,
    SceneBounds,
    cylindrical_aperture,
    multistatic_to_monostatic,
    pose_ranges,
    range_to_bin,
    round_trip_delay,
    valid_bins,
)
from .io import (
    Config,
    MeasurementSet,
    append_metrics_csv,
    export_ply,
    load_config,
    normalize_measurements,
    parse_config,
    read_dataset,
    read_volume,
    render_slice,
    write_dataset,
    write_history_csv,
    write_volume,
)
from .metrics import (
    MetricReport,
    chamfer,
    evaluate_fields,
    hausdorff,
    iou,
    psnr,
    ssim,
)
from .recon import (
    LossWeights,
    TrainConfig,
    TrainHistory,
    adam_step,
    backprojection,
    calibrate_gain,
    series_loss,
    simulate_measurements,
    smoothness_reg,
    sparsity_reg,
    spectral_loss,
    train,
)
from .scenes import (
    BUNDLED_SCENES,
    bundled_scene,
    default_aperture,
    default_bounds,
    default_chirp,
    single_point,
    sphere_shell,
    two_points,
)

__version__ = "0.1.0"

__all__ = [
    "Aperture",
    "BUNDLED_SCENES",
    "BadMagicError",
    "ChirpConfig",
    "CoherentBackprojection",
    "Config",
    "ConfigError",
    "DatasetFormatError",
    "DegenerateGeometryError",
    "EmptyFieldError",
    "InrField",
    "InvalidDelayError",
    "LossWeights",
    "MeasurementSet",
    "MetricReport",
    "NonFiniteLossError",
    "PointScatterers",
    "Pose",
    "QuerySet",
    "RadarFieldError",
    "SceneBounds",
    "SpectralReconstructor",
    "Spectrum",
    "ToneParams",
    "TrainConfig",
    "TrainHistory",
    "TruncatedFileError",
    "UnsupportedVersionError",
    "VoxelField",
    "adam_step",
    "append_metrics_csv",
    "backprojection",
    "beat_params",
    "bundled_scene",
    "calibrate_gain",
    "chamfer",
    "cylindrical_aperture",
    "default_aperture",
    "default_bounds",
    "default_chirp",
    "dft",
    "dirichlet_kernel",
    "dirichlet_magnitude",
    "evaluate_fields",
    "export_ply",
    "extract_pointcloud",
    "field_param_gradient",
    "field_to_grid",
    "hausdorff",
    "inverse_dft",
    "iou",
    "load_config",
    "make_query_grid",
    "multistatic_to_monostatic",
    "normalize_measurements",
    "parse_config",
    "pose_ranges",
    "psnr",
    "range_quantized_adjoint",
    "range_quantized_forward",
    "range_to_bin",
    "read_dataset",
    "read_volume",
    "render_slice",
    "round_trip_delay",
    "sample_field",
    "series_loss",
    "sheet_benchmark",
    "sheet_height",
    "simulate_measurements",
    "single_point",
    "smoothness_reg",
    "sparsity_reg",
    "spectral_adjoint",
    "spectral_forward",
    "spectral_loss",
    "sphere_shell",
    "ssim",
    "synth_beat_time",
    "time_domain_adjoint",
    "time_domain_forward",
    "tone_spectrum_closed_form",
    "train",
    "two_points",
    "valid_bins",
    "write_dataset",
    "write_history_csv",
    "write_volume",
    "wrap_phase",
]

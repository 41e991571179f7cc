"""Synthesis, polarimetric measurement and topological analysis of free-space
optical skyrmions built from Laguerre-Gaussian vector beams."""

from .errors import CoverageError, MeasurementError, SkyrmionError, StageError
from .field import (
    GridSpec,
    LGModeSpec,
    Optics,
    ScalarField,
    VectorBeam,
    build_beam,
    default_extent,
    lg_mode,
)
from .polarimetry import (
    BasisConvention,
    MeasurementSet,
    PoincareField,
    degrade,
    poincare_expectation,
    project_intensities,
    reconstruct,
    spherical_decompose,
)
from .topology import (
    AnalysisResult,
    SkyrmionDensityField,
    auto_radius,
    radius_sweep,
    skyrmion_density,
    skyrmion_number,
)
from .experiment import (
    AnalysisOptions,
    CalibrationReport,
    UncertaintyMap,
    analyze,
    calibrate_centers,
    estimate_uncertainty,
    ingest,
    save_measurement_set,
)

__version__ = "0.1.0"

"""Brownian loop-measure masses on Riemann surfaces.

Closed-form per-class masses (hyperbolic, flat, annulus, disc, sphere),
Fuchsian length-spectrum enumeration with a persistent cache format,
numerical verification of the length-spectrum identity and of the
determinant-of-Laplacian renormalization by two independent routes, and
a Monte Carlo cross-check of the flat-torus hit mass.
"""

from .errors import (
    AcceptanceFailure,
    ConfigError,
    DomainError,
    FitError,
    GaussBonnetWarning,
    GrunskyViolationError,
    HorizonError,
    InfiniteMassError,
    IterationDivisibilityWarning,
    LoopMeasureError,
    MalformedRecordError,
    MatrixClassificationError,
    NumericError,
    SpectrumChecksumError,
    SpectrumFormatError,
    SpectrumVersionError,
    UnsupportedPresentationError,
    UnverifiableMarkingError,
)
from .hypgeom import (
    HPoint,
    MoebiusMatrix,
    QuadratureSpec,
    geodesic_length_of_matrix,
    heat_kernel_C,
    heat_kernel_H,
    heat_kernel_H_at_distance,
    hyp_distance,
    li,
    li_tilde,
)
from .spectrum import (
    CyclicWord,
    GeodesicRecord,
    GroupPresentation,
    MarkovTriple,
    SpectrumTable,
    counting_function,
    enumerate_spectrum,
    export_csv,
    load_spectrum,
    markov_simple_lengths,
    markov_triples,
    save_spectrum,
)
from .loopmass import (
    AnnulusRoute,
    EllipseConformalData,
    FORMULA_DESCRIPTIONS,
    FormulaId,
    MassResult,
    StripVerification,
    TimeIntegralVerification,
    electrical_thickness,
    ellipse_conformal_data,
    essential_total_mass,
    mass_annulus_total,
    mass_annulus_winding,
    mass_disc_winding_intersecting_K,
    mass_flat_class,
    mass_hyperbolic_class,
    mass_sphere_winding_intersecting_K,
    mass_torus_hit,
    radial_slit_log_psi_prime,
    verify_strip_heat_integral,
    verify_time_integral,
)
from .identity import (
    ExtrapolationFit,
    ExtrapolationModel,
    IdentityReport,
    PunctureResidual,
    export_report,
    flat_puncture_report,
    hyperbolic_puncture_residual,
    tail_extrapolate,
)
from .detlap import (
    BlmParts,
    DetInputs,
    ErrorBudget,
    TailModel,
    TimeIntegralParts,
    UniversalConstants,
    ValueWithBound,
    S_X,
    S_X_primitive,
    blm_decomposition,
    constant_C,
    constant_C1,
    constant_C2,
    constant_C2_via_C1,
    constant_E,
    export_record,
    logdet_via_blm,
    logdet_via_time_integrals,
    make_synthetic_table,
    model_tail_S,
    nonprimitive_mass_sum,
    time_integral_decomposition,
    universal_constants,
    zeta_prime_minus_one,
)
from .mcloop import (
    LineFamily,
    LoopSampleSpec,
    McEstimate,
    batch_estimates,
    estimate_hit_mass,
    export_batches,
    hits_geodesic,
    path_hit_probability,
    sample_bridge,
    sample_duration,
)

__version__ = "0.1.0"

__all__ = [
    "AcceptanceFailure",
    "AnnulusRoute",
    "BlmParts",
    "ConfigError",
    "CyclicWord",
    "DetInputs",
    "DomainError",
    "EllipseConformalData",
    "ErrorBudget",
    "ExtrapolationFit",
    "ExtrapolationModel",
    "FORMULA_DESCRIPTIONS",
    "FitError",
    "FormulaId",
    "GaussBonnetWarning",
    "GeodesicRecord",
    "GroupPresentation",
    "GrunskyViolationError",
    "HPoint",
    "HorizonError",
    "IdentityReport",
    "InfiniteMassError",
    "IterationDivisibilityWarning",
    "LineFamily",
    "LoopMeasureError",
    "LoopSampleSpec",
    "MalformedRecordError",
    "MarkovTriple",
    "MassResult",
    "MatrixClassificationError",
    "McEstimate",
    "MoebiusMatrix",
    "NumericError",
    "PunctureResidual",
    "QuadratureSpec",
    "S_X",
    "S_X_primitive",
    "SpectrumChecksumError",
    "SpectrumFormatError",
    "SpectrumTable",
    "SpectrumVersionError",
    "StripVerification",
    "TailModel",
    "TimeIntegralParts",
    "TimeIntegralVerification",
    "UniversalConstants",
    "UnsupportedPresentationError",
    "UnverifiableMarkingError",
    "ValueWithBound",
    "batch_estimates",
    "blm_decomposition",
    "constant_C",
    "constant_C1",
    "constant_C2",
    "constant_C2_via_C1",
    "constant_E",
    "counting_function",
    "electrical_thickness",
    "ellipse_conformal_data",
    "enumerate_spectrum",
    "essential_total_mass",
    "estimate_hit_mass",
    "export_batches",
    "export_csv",
    "export_record",
    "export_report",
    "flat_puncture_report",
    "geodesic_length_of_matrix",
    "heat_kernel_C",
    "heat_kernel_H",
    "heat_kernel_H_at_distance",
    "hits_geodesic",
    "hyp_distance",
    "hyperbolic_puncture_residual",
    "li",
    "li_tilde",
    "load_spectrum",
    "logdet_via_blm",
    "logdet_via_time_integrals",
    "make_synthetic_table",
    "markov_simple_lengths",
    "markov_triples",
    "mass_annulus_total",
    "mass_annulus_winding",
    "mass_disc_winding_intersecting_K",
    "mass_flat_class",
    "mass_hyperbolic_class",
    "mass_sphere_winding_intersecting_K",
    "mass_torus_hit",
    "model_tail_S",
    "nonprimitive_mass_sum",
    "path_hit_probability",
    "radial_slit_log_psi_prime",
    "sample_bridge",
    "sample_duration",
    "save_spectrum",
    "tail_extrapolate",
    "time_integral_decomposition",
    "universal_constants",
    "verify_strip_heat_integral",
    "verify_time_integral",
    "zeta_prime_minus_one",
]

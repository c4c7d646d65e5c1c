"""Pseudo-spectral mild solutions of generalized Navier-Stokes on the torus,
with spectral-decay diagnostics for the analyticity-radius lower bound."""

__version__ = "0.1.0"

from .diagnostics import (
    BoundReport,
    InconclusiveFitError,
    NormParams,
    RadiusEstimate,
    X_norm,
    Y_norm,
    beta,
    bound_report,
    estimate_radius,
    eta_J,
    gevrey_norm,
    lambda_critical,
    lambda_subcritical,
    lebesgue_norm,
    p_gamma,
    sobolev_norm,
    zeta_J,
)
from .operators import (
    QCoefficients,
    VelocityField,
    apply_Q,
    heat_semigroup,
    leray_project,
    navier_stokes_coeffs,
    read_q_coefficients,
    write_q_coefficients,
)
from .solver import (
    BlowupError,
    PicardReport,
    SolverConfig,
    Trajectory,
    duhamel_B,
    etd_integrate,
    mild_residual,
    picard_solve,
)
from .spectral import (
    CorruptedFieldError,
    Grid,
    SpectralField,
    build_grid,
    dealias,
    forward_transform,
    inverse_transform,
    set_fft_workers,
)

__all__ = [
    "BlowupError",
    "BoundReport",
    "CorruptedFieldError",
    "Grid",
    "InconclusiveFitError",
    "NormParams",
    "PicardReport",
    "QCoefficients",
    "RadiusEstimate",
    "SolverConfig",
    "SpectralField",
    "Trajectory",
    "VelocityField",
    "X_norm",
    "Y_norm",
    "apply_Q",
    "beta",
    "bound_report",
    "build_grid",
    "dealias",
    "duhamel_B",
    "estimate_radius",
    "eta_J",
    "etd_integrate",
    "forward_transform",
    "gevrey_norm",
    "heat_semigroup",
    "inverse_transform",
    "lambda_critical",
    "lambda_subcritical",
    "lebesgue_norm",
    "leray_project",
    "mild_residual",
    "navier_stokes_coeffs",
    "p_gamma",
    "picard_solve",
    "read_q_coefficients",
    "set_fft_workers",
    "sobolev_norm",
    "write_q_coefficients",
    "zeta_J",
]

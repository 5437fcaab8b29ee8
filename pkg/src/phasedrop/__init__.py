"""Phase-field droplet dynamics on periodic domains.

A coupled Allen-Cahn / reaction-diffusion solver for deformable,
surfactant-driven droplets, with a quasi volume-preserving nonlocal penalty,
online verification of the model's energy and maximum-principle bounds,
2D interface extraction, and independent sharp-interface oracles for
convergence studies.
"""

from .diagnostics import (
    EnergyReport,
    EnvelopeParams,
    energy_report,
    envelope_check,
    envelope_params,
    export_measure_density,
    gradient_flow_energy,
    volume_drift_bound,
)
from .errors import (
    ComparisonFailure,
    ConfigError,
    InvariantViolation,
    NumericalFailure,
    PhasedropError,
)
from .geometry import (
    InterfaceCurve,
    centroid_drift,
    centroid_velocity,
    extract_contour,
    hausdorff_to_circle,
    radius_from_area,
)
from .grid import (
    Grid,
    ScalarField,
    grad_sq,
    helmholtz_solve,
    integrate,
    laplacian,
    make_grid,
)
from .oracle import (
    OracleTrajectory,
    forced_circle_trajectory,
    mcf_radius,
    propulsion_sign,
    radial_coupled_solve,
    steady_radial_concentration,
)
from .physics import (
    ModelParams,
    SimState,
    Variant,
    double_well,
    double_well_prime,
    initial_state,
    nonlocal_term,
    rhs_phi,
    surface_tension,
    volume_indicator,
    volume_indicator_prime,
    volume_penalty,
    volume_penalty_linear,
)
from .stepping import StepPolicy, UScheme, run_until, stable_dt, step

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""Everything the analysis bounds, computed online.

Energies:

    E_s = int( eps sigma^2 |grad phi|^2 / 2 + W(phi) / (2 eps) )
    E_p = alpha/2 * ( int G(phi) - int G(phi_0) )^2
    E   = E_s + E_p

E decays exactly when gamma vanishes, and grows at most like
exp(2 M_gamma^2 t) otherwise; both facts are monitored per record.

Stencil choice matters here.  The energies (E_s, E and the Lyapunov
functional below) quadrate |grad phi|^2 with one-sided differences, the
form whose exact discrete gradient is the compact Laplacian driving the
flow; with any other quadrature the explicit scheme is not exact gradient
descent and the dissipation and gradient-identity checks would only hold to
truncation error.  The measure-theoretic quantities keep the central-
difference ``grad_sq``: the diffuse surface density
eps |grad phi|^2 / 2 + W/(2 eps) (no sigma weight) integrates to
``mu_total``, which per unit of flat interface should approach the constant
int_0^1 sqrt(W) = 1/(6 sqrt(2)); its equipartition discrepancy ``xi``
measures how far the profile is from the standing wave.

The maximum-principle envelopes are explicit exponentials: an upper barrier
1 - D1 exp(-D2 t) and lower barrier D3 exp(-D2 t) for phi, and
D4 exp(-k t) for u, with D2 = [1/2 + eps (M_gamma + |Omega| alpha / 3)] /
(eps^2 tau).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grid import (
    ScalarField,
    grad_sq_forward_values,
    grad_sq_values,
    integrate_values,
)
from .physics import (
    ModelParams,
    SimState,
    Variant,
    double_well,
    nonlocal_term,
    surface_tension,
    volume_indicator,
)

__all__ = [
    "EnergyReport",
    "EnvelopeParams",
    "EnvelopeReport",
    "DriftCheck",
    "energy_report",
    "envelope_params",
    "envelope_check",
    "volume_drift_bound",
    "export_measure_density",
    "gradient_flow_energy",
]

ENVELOPE_TOL = 1e-8


@dataclass(frozen=True)
class EnergyReport:
    """Per-snapshot diagnostics; one of these becomes one CSV row."""

    t: float
    E_s: float
    E_p: float
    E: float
    xi: float
    mu_total: float
    stilde: float
    mass_G: float
    phi_min: float
    phi_max: float
    u_min: float
    stilde_l2_accum: float


def energy_report(state: SimState, params: ModelParams) -> EnergyReport:
    grid = state.grid
    vol = grid.cell_volume
    eps = params.epsilon
    phi = state.phi.values

    gsq = grad_sq_values(phi, grid.spacing)
    w = double_well(phi)
    grad_part = 0.5 * eps * gsq
    well_part = w / (2.0 * eps)

    grad_part_energy = 0.5 * eps * grad_sq_forward_values(phi, grid.spacing)
    e_s = integrate_values(params.sigma ** 2 * grad_part_energy + well_part, vol)
    mu_total = integrate_values(grad_part + well_part, vol)
    xi = integrate_values(np.abs(grad_part - well_part), vol)
    mass_g = integrate_values(volume_indicator(phi), vol)
    e_p = 0.5 * params.alpha * (mass_g - state.ref_mass_g) ** 2
    s_now = nonlocal_term(state, params)

    return EnergyReport(
        t=state.t,
        E_s=e_s,
        E_p=e_p,
        E=e_s + e_p,
        xi=xi,
        mu_total=mu_total,
        stilde=s_now,
        mass_G=mass_g,
        phi_min=float(phi.min()),
        phi_max=float(phi.max()),
        u_min=float(state.u.values.min()),
        stilde_l2_accum=state.stilde_l2_accum,
    )


@dataclass(frozen=True)
class EnvelopeParams:
    """Coefficients of the sub/super solution barriers."""

    d1: float
    d2: float
    d3: float
    d4: float
    k: float


def envelope_params(phi0: ScalarField, u0: ScalarField, params: ModelParams) -> EnvelopeParams:
    """Barrier coefficients from the discrete initial data.

    The decay rate d2 is divided by tau so nonunit relaxation keeps the
    barrier consistent with the slowed dynamics (tau = 1 reproduces the
    standard formula).
    """
    eps = params.epsilon
    omega = phi0.grid.volume
    d1 = 1.0 - max(0.5, float(phi0.values.max()))
    d2 = (0.5 + eps * (params.m_gamma + omega * params.alpha / 3.0)) / (
        eps * eps * params.tau
    )
    d3 = float(phi0.values.min())
    d4 = float(u0.values.min())
    return EnvelopeParams(d1=d1, d2=d2, d3=d3, d4=d4, k=params.k)


class EnvelopeReport(NamedTuple):
    passed: bool
    margin_phi_upper: float
    margin_phi_lower: float
    margin_u: float


def envelope_check(
    state: SimState,
    env: EnvelopeParams,
    params: ModelParams,
    tol: float = ENVELOPE_TOL,
) -> EnvelopeReport:
    """Compare field extrema against the exponential barriers.

    Margins are (barrier-side) slack including the tolerance; all three must
    be nonnegative to pass.  Failure is a report, not an exception: the run
    driver decides whether it is fatal.
    """
    t = state.t
    decay = math.exp(-env.d2 * t)
    upper = 1.0 - env.d1 * decay + tol
    lower = env.d3 * decay - tol
    u_floor = env.d4 * math.exp(-env.k * t) - tol

    phi = state.phi.values
    m_upper = upper - float(phi.max())
    m_lower = float(phi.min()) - lower
    m_u = float(state.u.values.min()) - u_floor
    passed = m_upper >= 0.0 and m_lower >= 0.0 and m_u >= 0.0
    return EnvelopeReport(passed, m_upper, m_lower, m_u)


class DriftCheck(NamedTuple):
    passed: bool
    drift: float
    bound: float


def volume_drift_bound(
    report: EnergyReport, e0: float, params: ModelParams, slack: float = 1.05
) -> DriftCheck:
    """Check |int G(phi) - int G(phi_0)| against the penalty-energy bound.

    The energy growth estimate caps E_p by exp(2 M^2 t) E(0), hence the
    drift by sqrt((2/alpha) exp(2 M^2 t) E(0)).  Multiplicative slack keeps
    the check scale-free.  Requires the G-based penalty variants.
    """
    if params.alpha <= 0.0:
        raise ValueError("volume_drift_bound requires alpha > 0")
    if params.variant is Variant.S_OLD:
        raise ValueError("drift bound applies to the G-based penalty variants")
    drift = abs(report.stilde) / params.alpha
    bound = math.sqrt(
        (2.0 / params.alpha) * math.exp(2.0 * params.m_gamma ** 2 * report.t) * e0
    )
    return DriftCheck(drift <= slack * bound, drift, bound)


def export_measure_density(state: SimState, params: ModelParams) -> ScalarField:
    """Diffuse surface measure density; integrates to ``mu_total``."""
    eps = params.epsilon
    gsq = grad_sq_values(state.phi.values, state.grid.spacing)
    density = 0.5 * eps * gsq + double_well(state.phi.values) / (2.0 * eps)
    return ScalarField(state.grid, density)


def gradient_flow_energy(state: SimState, params: ModelParams) -> float:
    """Full Lyapunov functional whose L^2 gradient drives the phi equation.

    On top of E_s + E_p this includes the surface-tension coupling
    int gamma(u) (1 - G(phi)) with the concentration frozen, so that
    d(phi)/dt = -(1/(eps tau)) * dE/d(phi) holds exactly, term by term.
    Undefined for the legacy linear penalty, which is not a gradient flow.
    """
    if params.variant is Variant.S_OLD:
        raise ValueError("legacy linear-penalty dynamics are not a gradient flow")
    grid = state.grid
    vol = grid.cell_volume
    eps = params.epsilon
    phi = state.phi.values

    gsq = grad_sq_forward_values(phi, grid.spacing)
    e_s = integrate_values(
        0.5 * eps * params.sigma ** 2 * gsq + double_well(phi) / (2.0 * eps), vol
    )
    mass_g = integrate_values(volume_indicator(phi), vol)
    e_p = 0.5 * params.alpha * (mass_g - state.ref_mass) ** 2
    if params.variant is Variant.CONST_GAMMA:
        gamma_vals = params.gamma_const
    else:
        gamma_vals = surface_tension(state.u.values, params)
    e_gamma = integrate_values(gamma_vals * (1.0 - volume_indicator(phi)), vol)
    return e_s + e_p + e_gamma

"""Potentials, surface tension, nonlocal volume penalty, and the phase
right-hand side.

The coupled system evolves an order parameter ``phi`` (1 inside the droplet,
0 in the ambient phase) and a surfactant concentration ``u``:

    eps^2 tau d(phi)/dt = eps^2 sigma^2 Lap(phi) - W'(phi)/2
                          - eps G'(phi) * (S(t) - gamma(u)),
    d(u)/dt = Lap(u) - k u + phi,

with the double well W(phi) = phi^2 (1-phi)^2 / 2, the smoothed volume
indicator G(phi) = phi^2/2 - phi^3/3, and a global volume penalty
S(t) = alpha * (int G(phi) - int G(phi_0)).  The identity
G'(phi) = sqrt(2 W(phi)) on [0, 1] ties the forcing strength to the diffuse
surface density and makes the flow the exact L^2 gradient flow of the
energy assembled in :mod:`phasedrop.diagnostics`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericalFailure
from .grid import Grid, ScalarField, integrate, integrate_values, laplacian_values

__all__ = [
    "Variant",
    "ModelParams",
    "SimState",
    "double_well",
    "double_well_prime",
    "volume_indicator",
    "volume_indicator_prime",
    "surface_tension",
    "volume_penalty",
    "volume_penalty_linear",
    "nonlocal_term",
    "initial_state",
    "rhs_phi",
]


class Variant(str, enum.Enum):
    """Which nonlocal term / surface tension the phi equation uses."""

    STILDE = "stilde"          # G-based volume penalty, gamma = gamma(u)
    S_OLD = "s_old"            # legacy linear-mass penalty, gamma = gamma(u)
    CONST_GAMMA = "const_gamma"  # G-based penalty, gamma held constant


@dataclass(frozen=True)
class ModelParams:
    """All physical constants of the coupled system.

    ``epsilon`` is the interface width; ``tau`` and ``sigma`` are relaxation
    and mobility knobs (the analysis normalizes both to 1, nonunit values are
    a generalization); ``alpha`` weights the volume penalty; ``k`` is the
    surfactant decay rate; ``gamma0``, ``u1`` and ``m`` parametrize the
    surface tension gamma(u) = 1 / (1 + (u/u1)^m) + gamma0.
    """

    epsilon: float
    tau: float = 1.0
    sigma: float = 1.0
    alpha: float = 0.0
    k: float = 1.0
    gamma0: float = 0.1
    u1: float = 1.0
    m: int = 2
    variant: Variant = Variant.STILDE
    gamma_const: float = 0.0

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.k > 0.0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.gamma0 < 0.0:
            raise ValueError(f"gamma0 must be nonnegative, got {self.gamma0}")
        if not self.u1 > 0.0:
            raise ValueError(f"u1 must be positive, got {self.u1}")
        if not (isinstance(self.m, int) and self.m >= 1):
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.CONST_GAMMA and self.gamma_const < 0.0:
            raise ValueError(
                f"gamma_const must be nonnegative, got {self.gamma_const}"
            )

    @property
    def m_gamma(self) -> float:
        """sup of gamma over admissible concentrations; enters the energy
        growth bound and the maximum-principle envelopes."""
        if self.variant is Variant.CONST_GAMMA:
            return self.gamma_const
        return 1.0 + self.gamma0

    def with_(self, **kwargs) -> "ModelParams":
        return replace(self, **kwargs)


# -- potentials ---------------------------------------------------------------

def double_well(phi):
    """W(phi) = phi^2 (1 - phi)^2 / 2, minima at the pure phases 0 and 1."""
    q = phi * (1.0 - phi)
    return 0.5 * q * q


def double_well_prime(phi):
    """W'(phi) = phi (1 - phi) (1 - 2 phi)."""
    return phi * (1.0 - phi) * (1.0 - 2.0 * phi)


def volume_indicator(phi):
    """G(phi) = phi^2/2 - phi^3/3: smoothed indicator, G(0)=0, G(1)=1/6."""
    return phi * phi * (0.5 - phi / 3.0)


def volume_indicator_prime(phi):
    """G'(phi) = phi (1 - phi) = sqrt(2 W(phi)) on [0, 1]."""
    return phi * (1.0 - phi)


def _int_pow(x, m: int):
    """x**m by squaring, for exact integer-exponent semantics."""
    result = None
    base = x
    e = m
    while e > 0:
        if e & 1:
            result = base if result is None else result * base
        e >>= 1
        if e:
            base = base * base
    return result


def surface_tension(u, params: ModelParams):
    """gamma(u): monotone decreasing from 1 + gamma0 toward gamma0.

    Accepts scalars or arrays.  Genuinely negative concentrations are
    rejected; sub-roundoff negatives (|u| <= 1e-9) are clamped to zero, since
    the continuous solution is positive and only roundoff can graze it.
    """
    u = np.asarray(u, dtype=np.float64)
    if params.variant is Variant.CONST_GAMMA:
        out = np.full_like(u, params.gamma_const)
        return out if out.ndim else float(out)
    if np.any(u < -1e-9):
        raise ValueError("surface tension requires nonnegative concentration")
    u = np.maximum(u, 0.0)
    out = 1.0 / (1.0 + _int_pow(u / params.u1, params.m)) + params.gamma0
    return out if out.ndim else float(out)


# -- nonlocal terms -----------------------------------------------------------

def volume_penalty(phi: ScalarField, ref_mass: float, alpha: float) -> float:
    """S(t) = alpha * (int G(phi) - ref_mass); |S| <= alpha |Omega| / 3."""
    return alpha * (integrate_values(
        volume_indicator(phi.values), phi.grid.cell_volume) - ref_mass)


def volume_penalty_linear(phi: ScalarField, ref_mass: float, alpha: float) -> float:
    """Legacy penalty alpha * (int phi - ref_mass); |S| <= alpha |Omega|."""
    return alpha * (integrate(phi) - ref_mass)


# -- simulation state ---------------------------------------------------------

@dataclass
class SimState:
    """Single-owner mutable bundle advanced by the time integrator.

    ``ref_mass`` drives the dynamics (int G(phi_0), or int phi_0 for the
    legacy variant) and is frozen at initialization from the discrete
    quadrature of the discrete initial field, so the penalty starts at
    exactly zero.  ``ref_mass_g`` always stores int G(phi_0) for the
    diagnostics, whichever variant runs.  ``stilde_l2_accum`` is the running
    integral of the squared nonlocal term, accumulated by the integrator.
    """

    phi: ScalarField
    u: ScalarField
    t: float
    ref_mass: float
    ref_mass_g: float
    stilde: float = 0.0
    stilde_l2_accum: float = 0.0
    steps: int = 0

    @property
    def grid(self) -> Grid:
        return self.phi.grid


def initial_state(phi0: ScalarField, u0: ScalarField, params: ModelParams) -> SimState:
    """Freeze the reference mass and wrap the initial fields.

    Initial data must satisfy 0 <= phi0 <= 1 and u0 >= 0; the strict-bound
    hypotheses of the maximum principle are monitored at run time, not here,
    because pure-phase test states (phi identically 0 or 1) are legitimate
    stationary inputs.
    """
    if phi0.grid != u0.grid:
        raise ValueError("phi0 and u0 must share one grid")
    if phi0.values.min() < 0.0 or phi0.values.max() > 1.0:
        raise ValueError("initial phi must lie in [0, 1]")
    if u0.values.min() < 0.0:
        raise ValueError("initial u must be nonnegative")
    ref_g = integrate_values(volume_indicator(phi0.values), phi0.grid.cell_volume)
    if params.variant is Variant.S_OLD:
        ref = integrate(phi0)
    else:
        ref = ref_g
    return SimState(
        phi=phi0.copy(), u=u0.copy(), t=0.0,
        ref_mass=ref, ref_mass_g=ref_g, stilde=0.0, stilde_l2_accum=0.0,
        steps=0,
    )


def nonlocal_term(state: SimState, params: ModelParams) -> float:
    """Current value of the variant's nonlocal term, from the live phi."""
    if params.variant is Variant.S_OLD:
        return volume_penalty_linear(state.phi, state.ref_mass, params.alpha)
    return volume_penalty(state.phi, state.ref_mass, params.alpha)


def rhs_phi_values(
    phi: np.ndarray,
    gamma_vals,
    s_now: float,
    params: ModelParams,
    spacing,
) -> np.ndarray:
    """d(phi)/dt on bare arrays; ``gamma_vals`` may be a scalar or field."""
    eps = params.epsilon
    lap = laplacian_values(phi, spacing)
    reaction = double_well_prime(phi) / (2.0 * eps * eps)
    forcing = volume_indicator_prime(phi) * ((s_now - gamma_vals) / eps)
    return (params.sigma ** 2 * lap - reaction - forcing) / params.tau


def rhs_phi(state: SimState, params: ModelParams) -> ScalarField:
    """Assemble d(phi)/dt at the state's current fields.

    The nonlocal term is recomputed from the live phi so the result is the
    exact (negative, 1/(eps tau)-scaled) L^2 gradient of the energy.
    """
    s_now = nonlocal_term(state, params)
    if params.variant is Variant.CONST_GAMMA:
        gamma_vals = params.gamma_const
    else:
        gamma_vals = surface_tension(state.u.values, params)
    out = rhs_phi_values(
        state.phi.values, gamma_vals, s_now, params, state.grid.spacing
    )
    bad = ~np.isfinite(out)
    if bad.any():
        where = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NumericalFailure(f"non-finite phi right-hand side at cell {where}")
    return ScalarField(state.grid, out)

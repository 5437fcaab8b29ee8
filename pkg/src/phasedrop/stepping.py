"""Stability-controlled explicit time stepping for the coupled system.

Forward Euler is deliberate: under the CFL bound below the update is a
monotone scheme, which is what makes the discrete maximum principle provable
and testable.  The surfactant equation may instead be stepped implicitly
(backward Euler through the periodic Helmholtz solve) when its diffusion
limit would bind.

Coupling is explicit and Jacobi-style: the penalty S and the concentration u
entering the phi update are taken at t_n, then u is updated with phi at t_n.
The splitting error is O(dt), matching the scheme order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvariantViolation, NumericalFailure
from .grid import (
    Grid,
    ScalarField,
    helmholtz_solve_values,
    laplacian_values,
)
from .physics import (
    ModelParams,
    SimState,
    Variant,
    rhs_phi_values,
    surface_tension,
    volume_indicator,
)

__all__ = ["UScheme", "StepPolicy", "stable_dt", "step", "run_until"]

PHI_RANGE_TOL = 1e-9
U_POSITIVITY_TOL = 1e-12


class UScheme(str, enum.Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class StepPolicy:
    """Time-step selection: safety fraction, u scheme, optional fixed dt."""

    cfl_safety: float = 0.5
    u_scheme: UScheme = UScheme.EXPLICIT
    dt_override: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        object.__setattr__(self, "u_scheme", UScheme(self.u_scheme))
        if self.dt_override is not None and not self.dt_override > 0.0:
            raise ValueError(f"dt_override must be positive, got {self.dt_override}")


def stable_dt(grid: Grid, params: ModelParams, policy: StepPolicy) -> float:
    """Largest safe forward-Euler step, scaled by the safety factor.

    Three rates compete: phi diffusion (sigma^2 Laplacian), the stiff phi
    reaction (|W''| <= 1 on [0,1] gives rate 1/(2 eps^2 tau); the bound is
    doubled as margin for the order-eps forcing), and u diffusion, which
    drops out when u is stepped implicitly.
    """
    h2_min = min(h * h for h in grid.spacing)
    n = grid.ndim
    terms = [
        params.tau * h2_min / (2.0 * n * params.sigma ** 2),
        params.tau * params.epsilon ** 2,
    ]
    if policy.u_scheme is UScheme.EXPLICIT:
        terms.append(h2_min / (2.0 * n))
    return policy.cfl_safety * min(terms)


def _check_max_principle(phi: np.ndarray, u: np.ndarray) -> None:
    phi_min = float(phi.min())
    phi_max = float(phi.max())
    u_min = float(u.min())
    if phi_min <= -PHI_RANGE_TOL or phi_max >= 1.0 + PHI_RANGE_TOL:
        raise InvariantViolation(
            f"max principle violated: phi range [{phi_min:.3e}, {phi_max:.6f}] "
            f"outside (-{PHI_RANGE_TOL:.0e}, 1+{PHI_RANGE_TOL:.0e})"
        )
    if u_min <= -U_POSITIVITY_TOL:
        raise InvariantViolation(
            f"max principle violated: min u = {u_min:.3e} <= -{U_POSITIVITY_TOL:.0e}"
        )


def step(
    state: SimState,
    params: ModelParams,
    dt: float,
    policy: StepPolicy,
    check: bool = True,
) -> SimState:
    """Advance one forward-Euler step; returns a fresh state.

    phi is updated first using u at t_n, then u using phi at t_n, so both
    updates see the same time level.  The nonlocal term is evaluated at t_n
    and its square is accumulated into the running time integral with the
    same left-endpoint rule.
    """
    grid = state.grid
    spacing = grid.spacing
    phi = state.phi.values
    u = state.u.values

    if params.variant is Variant.S_OLD:
        mass = float(np.sum(phi)) * grid.cell_volume
    else:
        mass = float(np.sum(volume_indicator(phi))) * grid.cell_volume
    if not np.isfinite(mass):
        raise NumericalFailure("non-finite phi field entering step")
    s_now = params.alpha * (mass - state.ref_mass)

    if params.variant is Variant.CONST_GAMMA:
        gamma_vals = params.gamma_const
    else:
        gamma_vals = surface_tension(u, params)

    phi_new = phi + dt * rhs_phi_values(phi, gamma_vals, s_now, params, spacing)

    if policy.u_scheme is UScheme.EXPLICIT:
        u_new = u + dt * (laplacian_values(u, spacing) - params.k * u + phi)
    else:
        # ((1/dt + k) - Lap) u_new = u/dt + phi_n
        u_new = helmholtz_solve_values(u / dt + phi, 1.0 / dt, params.k, grid)

    if check:
        if not (np.isfinite(phi_new).all() and np.isfinite(u_new).all()):
            raise NumericalFailure(
                f"non-finite field after step at t = {state.t + dt:.6g}"
            )
        _check_max_principle(phi_new, u_new)

    return SimState(
        phi=ScalarField(grid, phi_new),
        u=ScalarField(grid, u_new),
        t=state.t + dt,
        ref_mass=state.ref_mass,
        ref_mass_g=state.ref_mass_g,
        stilde=s_now,
        stilde_l2_accum=state.stilde_l2_accum + s_now * s_now * dt,
        steps=state.steps + 1,
    )


def run_until(
    state: SimState,
    params: ModelParams,
    policy: StepPolicy,
    t_end: float,
    cadence: int = 1,
    observer: Callable[[SimState], None] | None = None,
    check: bool = True,
) -> SimState:
    """March to ``t_end``, invoking ``observer`` every ``cadence`` steps.

    The observer also fires at t = 0 and after the final step, which is
    shortened to land exactly on ``t_end`` so runs are comparable across
    configurations.  If ``t_end`` equals the current time, nothing runs and
    the observer never fires.
    """
    if t_end < state.t:
        raise ValueError(f"t_end = {t_end} lies before current t = {state.t}")
    if cadence < 1:
        raise ValueError(f"cadence must be >= 1, got {cadence}")
    if t_end == state.t:
        return state

    dt = stable_dt(state.grid, params, policy)
    if policy.dt_override is not None:
        if policy.u_scheme is UScheme.EXPLICIT and policy.dt_override > dt * (1 + 1e-12):
            raise InvariantViolation(
                f"CFL exceeded: dt_override = {policy.dt_override:.3e} "
                f"> stable dt = {dt:.3e} with explicit u stepping"
            )
        dt = policy.dt_override

    if observer is not None:
        observer(state)

    step_index = 0
    while state.t < t_end:
        dt_n = min(dt, t_end - state.t)
        last = state.t + dt_n >= t_end
        try:
            state = step(state, params, dt_n, policy, check=check)
        except (NumericalFailure, InvariantViolation) as exc:
            raise type(exc)(f"step {step_index + 1}: {exc}") from exc
        if last:
            state.t = t_end
        step_index += 1
        if observer is not None and (step_index % cadence == 0 or last):
            observer(state)
    return state

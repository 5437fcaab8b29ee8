"""High-accuracy radial solvers for the sharp-interface limit law.

In the vanishing-interface-width limit the droplet boundary moves with
normal velocity

    v = -kappa + sqrt(2) * (gamma(u) - S(t)),

where kappa is the mean curvature and the volume penalty collapses to
S = (alpha/6) * (|region(t)| - |region(0)|), since 6 G -> indicator in the
limit.  For radially symmetric data this reduces to a scalar ODE for the
radius, optionally coupled to a radial reaction-diffusion problem for the
concentration:

    dR/dt = -(n-1)/R + sqrt(2) * (gamma(u(R, t)) - (alpha/6) w_n (R^n - R0^n)),
    du/dt = u_rr + ((n-1)/r) u_r - k u + chi_{r < R(t)},

with w_2 = pi and w_3 = 4 pi / 3.  These solvers are the convergence
targets for the phase-field runs; they deliberately share no discretization
machinery with the torus solver.

The radial problem lives on [0, r_max], not the torus, so comparisons are
only meaningful while the droplet stays well inside the periodic box; the
comparison harness enforces that window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import NumericalFailure
from .physics import ModelParams, Variant, surface_tension

__all__ = [
    "OracleTrajectory",
    "mcf_radius",
    "forced_circle_trajectory",
    "radial_coupled_solve",
    "steady_radial_concentration",
    "propulsion_sign",
]

SPHERE_VOLUME_COEFF = {2: math.pi, 3: 4.0 * math.pi / 3.0}


@dataclass
class OracleTrajectory:
    """Radius history of a radial sharp-interface solve.

    When the radius reaches the minimum resolvable value the trajectory
    stops early with ``extinct`` set; ``times``/``radii`` then end at the
    last resolvable sample.
    """

    times: np.ndarray
    radii: np.ndarray
    u_at_interface: np.ndarray | None = None
    r_grid: np.ndarray | None = None
    u_final: np.ndarray | None = None
    extinct: bool = False

    def radius_at(self, t) -> np.ndarray:
        """Linear interpolation of the radius history."""
        t = np.asarray(t, dtype=np.float64)
        if np.any(t > self.times[-1] + 1e-12):
            raise ValueError(
                f"requested time beyond trajectory end {self.times[-1]:.6g}"
            )
        return np.interp(t, self.times, self.radii)

    def write_csv(self, path) -> None:
        """Export the trajectory: t, radius[, u_at_interface]."""
        with_u = self.u_at_interface is not None
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,radius,u_at_interface\n" if with_u else "t,radius\n")
            for i, (t, r) in enumerate(zip(self.times, self.radii)):
                row = f"{float(t)!r},{float(r)!r}"
                if with_u:
                    row += f",{float(self.u_at_interface[i])!r}"
                fh.write(row + "\n")


def mcf_radius(r0: float, t: float, n: int = 2) -> float:
    """Exact shrinking-circle law R(t) = sqrt(R0^2 - 2 (n-1) t)."""
    if n not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {n}")
    if not r0 > 0.0:
        raise ValueError(f"initial radius must be positive, got {r0}")
    t_ext = r0 * r0 / (2.0 * (n - 1))
    if t >= t_ext:
        raise ValueError(
            f"time {t} is at or past the extinction time {t_ext:.6g}"
        )
    return math.sqrt(r0 * r0 - 2.0 * (n - 1) * t)


def _circle_rate(r: float, r0: float, gamma_hat: float, alpha: float, n: int) -> float:
    penalty = (alpha / 6.0) * SPHERE_VOLUME_COEFF[n] * (r ** n - r0 ** n)
    return -(n - 1) / r + math.sqrt(2.0) * (gamma_hat - penalty)


def _rk4_step(r: float, dt: float, rate, r_min: float) -> float | None:
    """One RK4 step of dR/dt = rate(R); None if any stage hits r_min."""
    k1 = rate(r)
    r2 = r + 0.5 * dt * k1
    if r2 <= r_min:
        return None
    k2 = rate(r2)
    r3 = r + 0.5 * dt * k2
    if r3 <= r_min:
        return None
    k3 = rate(r3)
    r4 = r + dt * k3
    if r4 <= r_min:
        return None
    k4 = rate(r4)
    r_new = r + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return r_new if r_new > r_min else None


def _rk4_circle(
    r0: float, gamma_hat: float, alpha: float, n: int, dt: float, t_end: float,
    r_min: float,
):
    times = [0.0]
    radii = [r0]
    r = r0
    extinct = False
    n_steps = max(1, math.ceil(t_end / dt - 1e-12))
    dt = t_end / n_steps

    def rate(radius):
        return _circle_rate(radius, r0, gamma_hat, alpha, n)

    for istep in range(n_steps):
        r_new = _rk4_step(r, dt, rate, r_min)
        t = (istep + 1) * dt
        if r_new is None:
            extinct = True
            times.append(t)
            radii.append(r_min)
            break
        r = r_new
        times.append(t)
        radii.append(r)
    return np.asarray(times), np.asarray(radii), extinct


def forced_circle_trajectory(
    r0: float,
    gamma_hat: float,
    alpha: float,
    n: int = 2,
    dt: float = 1e-4,
    t_end: float = 0.02,
    r_min: float = 1e-3,
    richardson_tol: float = 1e-8,
    max_refinements: int = 16,
) -> OracleTrajectory:
    """RK4 integration of the constant-gamma radius law.

    The step is refined (halved) until a Richardson check, comparing the
    terminal radius against a half-step integration, falls below
    ``richardson_tol``; both integrations must agree on extinction.
    """
    if n not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {n}")
    if not r0 > 0.0:
        raise ValueError(f"initial radius must be positive, got {r0}")
    if not (dt > 0.0 and t_end > 0.0):
        raise ValueError("dt and t_end must be positive")

    coarse = _rk4_circle(r0, gamma_hat, alpha, n, dt, t_end, r_min)
    for _ in range(max_refinements):
        fine = _rk4_circle(r0, gamma_hat, alpha, n, dt / 2.0, t_end, r_min)
        if coarse[2] == fine[2] and (
            coarse[2] or abs(coarse[1][-1] - fine[1][-1]) < richardson_tol
        ):
            t, r, extinct = fine
            return OracleTrajectory(times=t, radii=r, extinct=extinct)
        dt /= 2.0
        coarse = fine
    raise NumericalFailure(
        "forced_circle_trajectory failed its Richardson check after "
        f"{max_refinements} refinements (last dt = {dt:.3e})"
    )


def _radial_operator(n: int, dr: float, n_cells: int):
    """Conservative radial Laplacian on cell centers r_j = (j + 1/2) dr.

    Zero flux holds at both ends: the r^(n-1) face weight vanishes at the
    origin and the outer face flux is dropped.  Returns (lower, diag, upper)
    stencil bands.
    """
    j = np.arange(n_cells)
    r_center = (j + 0.5) * dr
    w_minus = (j * dr) ** (n - 1)
    w_plus = ((j + 1) * dr) ** (n - 1)
    w_plus[-1] = 0.0
    scale = 1.0 / (r_center ** (n - 1) * dr * dr)
    lower = w_minus * scale
    upper = w_plus * scale
    diag = -(w_minus + w_plus) * scale
    return lower, diag, upper


def _interface_source(radius: float, n: int, dr: float, n_cells: int) -> np.ndarray:
    """Indicator of r < radius, volume-weighted in the cut cell."""
    j = np.arange(n_cells)
    r_lo = j * dr
    r_hi = (j + 1) * dr
    src = np.zeros(n_cells)
    src[r_hi <= radius] = 1.0
    cut = (r_lo < radius) & (radius < r_hi)
    if np.any(cut):
        frac = (radius ** n - r_lo[cut] ** n) / (r_hi[cut] ** n - r_lo[cut] ** n)
        src[cut] = frac
    return src


def steady_radial_concentration(
    radius: float, params: ModelParams, r_max: float, dr: float, n: int = 2
) -> tuple[np.ndarray, np.ndarray]:
    """Direct solve of (k - Lap_r) u = chi_{r < radius}; returns (r, u)."""
    if n not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {n}")
    n_cells = int(round(r_max / dr))
    lower, diag, upper = _radial_operator(n, dr, n_cells)
    ab = np.zeros((3, n_cells))
    ab[0, 1:] = -upper[:-1]
    ab[1, :] = params.k - diag
    ab[2, :-1] = -lower[1:]
    rhs = _interface_source(radius, n, dr, n_cells)
    u = solve_banded((1, 1), ab, rhs)
    r = (np.arange(n_cells) + 0.5) * dr
    return r, u


def radial_coupled_solve(
    r0: float,
    u0_profile,
    params: ModelParams,
    r_max: float,
    dr: float,
    dt: float,
    t_end: float,
    n: int = 2,
    r_min: float = 1e-3,
    record_every: int = 1,
    freeze_radius: bool = False,
) -> OracleTrajectory:
    """Coupled radius ODE + radial concentration PDE.

    The concentration advances by Crank-Nicolson with the droplet source
    frozen at the step start; the radius advances by RK4 against the
    start-of-step concentration profile, sampled at the stage radii by
    linear interpolation.  With a constant surface tension this reduces
    exactly to the forced-circle integrator.  ``freeze_radius`` pins the
    interface (the infinite-penalty limit) so only the concentration
    relaxes.
    """
    if n not in (2, 3):
        raise ValueError(f"dimension must be 2 or 3, got {n}")
    if r_max < 3.0 * r0:
        raise ValueError(f"r_max = {r_max} too small; need at least 3 R0 = {3 * r0}")
    if dr > r0 / 50.0:
        raise ValueError(f"dr = {dr} too coarse; need dr <= R0/50 = {r0 / 50:.4g}")
    # RK4 stability of the radius step against the penalty stiffness
    rate_jacobian = (n - 1) / (r0 * r0) + math.sqrt(2.0) * (
        params.alpha / 6.0
    ) * SPHERE_VOLUME_COEFF[n] * n * r0 ** (n - 1)
    if not freeze_radius and dt * rate_jacobian > 2.5:
        raise ValueError(
            f"dt = {dt:.3g} too large for the radius stiffness "
            f"{rate_jacobian:.3g}; need dt <= {2.5 / rate_jacobian:.3g} "
            "(or freeze_radius for the infinite-penalty limit)"
        )

    n_cells = int(round(r_max / dr))
    r = (np.arange(n_cells) + 0.5) * dr
    if callable(u0_profile):
        u = np.asarray(u0_profile(r), dtype=np.float64) * np.ones_like(r)
    else:
        u = np.asarray(u0_profile, dtype=np.float64) * np.ones_like(r)
    if u.shape != r.shape:
        raise ValueError("u0 profile does not match the radial grid")

    lower, diag, upper = _radial_operator(n, dr, n_cells)
    # Crank-Nicolson bands for (I - dt/2 (Lap - k)) u_new
    ab = np.zeros((3, n_cells))
    ab[0, 1:] = -0.5 * dt * upper[:-1]
    ab[1, :] = 1.0 + 0.5 * dt * (params.k - diag)
    ab[2, :-1] = -0.5 * dt * lower[1:]

    def apply_op(vec):
        out = diag * vec
        out[:-1] += upper[:-1] * vec[1:]
        out[1:] += lower[1:] * vec[:-1]
        return out - params.k * vec

    def gamma_at(radius: float, profile: np.ndarray) -> float:
        if params.variant is Variant.CONST_GAMMA:
            return params.gamma_const
        u_r = float(np.interp(radius, r, profile))
        return float(surface_tension(max(u_r, 0.0), params))

    def rate(radius: float, profile: np.ndarray) -> float:
        penalty = (params.alpha / 6.0) * SPHERE_VOLUME_COEFF[n] * (
            radius ** n - r0 ** n
        )
        return -(n - 1) / radius + math.sqrt(2.0) * (
            gamma_at(radius, profile) - penalty
        )

    n_steps = max(1, math.ceil(t_end / dt - 1e-12))
    dt = t_end / n_steps

    times = [0.0]
    radii = [r0]
    u_iface = [float(np.interp(r0, r, u))]
    radius = r0
    extinct = False
    t = 0.0
    for istep in range(n_steps):
        if not freeze_radius:
            radius_new = _rk4_step(radius, dt, lambda rr: rate(rr, u), r_min)
            if radius_new is None:
                extinct = True
            else:
                radius = radius_new

        src = _interface_source(min(radius, r_max), n, dr, n_cells)
        rhs = u + 0.5 * dt * apply_op(u) + dt * src
        u = solve_banded((1, 1), ab, rhs)
        t = (istep + 1) * dt

        if extinct:
            times.append(t)
            radii.append(r_min)
            u_iface.append(float(np.interp(r_min, r, u)))
            break
        if radius > 0.9 * r_max:
            raise NumericalFailure(
                f"radial solve left its validity window: R = {radius:.4g} "
                f"> 0.9 r_max at t = {t:.6g}"
            )
        if (istep + 1) % record_every == 0 or istep + 1 == n_steps:
            times.append(t)
            radii.append(radius)
            u_iface.append(float(np.interp(radius, r, u)))

    return OracleTrajectory(
        times=np.asarray(times),
        radii=np.asarray(radii),
        u_at_interface=np.asarray(u_iface),
        r_grid=r,
        u_final=u,
        extinct=extinct,
    )


def propulsion_sign(u_plus: float, u_minus: float, params: ModelParams) -> int:
    """Predicted drift direction from a two-sided surface-tension evaluation.

    Evaluates the limit law's forcing at the two diametral interface points
    of a disk: the side with the larger gamma advances faster outward, so
    the centroid moves toward it.  Returns +1 for drift toward the plus
    side, -1 toward the minus side, 0 for a tie.
    """
    g_plus = float(surface_tension(u_plus, params))
    g_minus = float(surface_tension(u_minus, params))
    if g_plus > g_minus:
        return 1
    if g_plus < g_minus:
        return -1
    return 0

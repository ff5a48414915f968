"""Time integrators for the full, transformed and averaged equations.

* full: ``i u_t + d(t) u_xx + G(t/eps) |u|^2 u = 0`` by Strang splitting. The
  linear substeps are exact multipliers built from ``int d``; the nonlinear
  substep is the exact pointwise phase rotation
  ``u -> u exp(i |u|^2 int G)``.  Steps are aligned to the dispersion
  breakpoints ``t/eps in Z`` so every integral is over a smooth piece.
* transformed: ``v = T_{-D(t/eps)} u``.  Either pulled back from the full
  solution (exact change of variables) or integrated directly with
  interaction-picture RK4.
* averaged: interaction-picture RK4 on ``i v_t + d_av v_xx + Q_avg(v) = 0``.

Interaction picture: over a step starting at ``t_n`` the unknown is
``w(s) = T_{-d_av (s - t_n)} v(s)``, which removes the (possibly stiff)
``d_av`` dispersion from the stepped equation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fiber
from .fiber import FiberParams, integral_d, integral_G
from .grid import ComplexField, SpatialGrid, Trajectory, h1_norm, l2_norm
from .nonlinearities import QuadratureRule, Q_avg_hat, cubic, gauss_legendre
from .propagators import free_T

logger = logging.getLogger(__name__)

__all__ = [
    "SolveConfig",
    "BlowUpError",
    "StepAlignmentError",
    "StepSizeError",
    "step_full_strang",
    "solve_full",
    "solve_transformed",
    "solve_averaged",
    "pull_back",
    "energy",
    "averaged_energy",
    "quartic_integral",
    "EnergyResidualReport",
    "energy_derivative_residual",
]

# relative slack when deciding whether a time sits on a breakpoint
_ALIGN_TOL = 1e-9


class BlowUpError(RuntimeError):
    """Solution left the finite/bounded regime; carries the partial trajectory."""

    def __init__(self, msg: str, t: float, h1: float, trajectory: Trajectory):
        super().__init__(msg)
        self.t = t
        self.h1 = h1
        self.trajectory = trajectory


class StepAlignmentError(ValueError):
    """A step would straddle a breakpoint of d0 or G."""


class StepSizeError(RuntimeError):
    """Monitored drift exceeded its budget; the time step is too large."""


@dataclass
class SolveConfig:
    t_end: float = 1.0
    steps_per_half_cell: int = 20
    dt: float = 1e-3
    snapshot_stride: int = 1
    quadrature: QuadratureRule = field(default_factory=gauss_legendre)
    dealias: bool = False
    growth_limit: float = 1e3
    mass_drift_budget: float = 1e-8

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be > 0")
        if int(self.steps_per_half_cell) < 1 or int(self.snapshot_stride) < 1:
            raise ValueError("steps_per_half_cell and snapshot_stride must be >= 1")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")


def _step_count(t_end: float, dt: float) -> int:
    n = round(t_end / dt)
    if n < 1 or abs(n * dt - t_end) > _ALIGN_TOL * max(1.0, t_end):
        raise StepAlignmentError(f"t_end={t_end} is not a whole number of steps dt={dt}")
    return n


def _dealias_mask(grid: SpatialGrid) -> np.ndarray:
    k = np.abs(np.fft.fftfreq(grid.n, d=1.0 / grid.n))
    return (k <= grid.n // 3).astype(float)


def _crosses_breakpoint(t: float, dt: float, eps: float) -> bool:
    s0, s1 = t / eps, (t + dt) / eps
    k = math.floor(s0 + _ALIGN_TOL)
    return s1 > k + 1 + _ALIGN_TOL


def pull_back(u: ComplexField, t: float, params: FiberParams) -> ComplexField:
    """``v = T_{-D(t/eps)} u``."""
    return free_T(u, -fiber.D(t / params.eps))


def quartic_integral(f: ComplexField) -> float:
    a2 = f.values.real**2 + f.values.imag**2
    return float(f.grid.dx * np.sum(a2 * a2))


def _kinetic(f: ComplexField) -> float:
    # ||f_x||^2 via Parseval on raw FFT coefficients
    fh = np.fft.fft(f.values)
    return float(f.grid.dx / f.grid.n * np.sum(f.grid.xi2 * (fh.real**2 + fh.imag**2)))


def energy(v: ComplexField, t: float, params: FiberParams) -> float:
    """``(d_av/2) ||v_x||^2 - (G(t/eps)/4) int |T_{D(t/eps)} v|^4``."""
    u = free_T(v, params.D(t))
    return 0.5 * params.d_av * _kinetic(v) - 0.25 * params.G(t) * quartic_integral(u)


def _energy_of_u(u: ComplexField, t: float, params: FiberParams) -> float:
    # same value as energy(pull_back(u)); T commutes with d_x
    return 0.5 * params.d_av * _kinetic(u) - 0.25 * params.G(t) * quartic_integral(u)


def averaged_energy(v: ComplexField, gamma: float, d_av: float,
                    rule: QuadratureRule | None = None) -> float:
    """Conserved Hamiltonian of the averaged equation (quadrature in r)."""
    rule = rule or gauss_legendre()
    g = v.grid
    z = np.fft.ifft(rule.multipliers(g) * np.fft.fft(v.values), axis=1)
    a2 = z.real**2 + z.imag**2
    quart = g.dx * np.sum(a2 * a2, axis=1)
    w = rule.weights * fiber.psi(rule.nodes, gamma)
    return 0.5 * d_av * _kinetic(v) - 0.25 * float(w @ quart)


class _Monitor:
    """Records snapshots and enforces the finite/bounded-growth contract."""

    def __init__(self, grid: SpatialGrid, stride: int, growth_limit: float,
                 energy_fn: Callable[[ComplexField, float], float]):
        self.tr = Trajectory()
        self.grid = grid
        self.stride = stride
        self.growth_limit = growth_limit
        self.energy_fn = energy_fn
        self.h1_0: float | None = None

    def record(self, values: np.ndarray, t: float) -> None:
        f = ComplexField(self.grid, values.copy())
        if not f.is_finite():
            raise BlowUpError(f"non-finite samples at t={t:.6g}", t, math.inf, self.tr)
        h1 = h1_norm(f)
        if self.h1_0 is None:
            self.h1_0 = h1
        elif h1 > self.growth_limit * max(self.h1_0, 1e-300):
            raise BlowUpError(
                f"H1 norm grew to {h1:.3e} (> {self.growth_limit:g} x initial) at t={t:.6g}",
                t, h1, self.tr,
            )
        self.tr.append(t, f, l2_norm(f) ** 2, h1, self.energy_fn(f, t))

    def check_finite(self, values: np.ndarray, t: float) -> None:
        if not np.all(np.isfinite(values)):
            raise BlowUpError(f"non-finite samples at t={t:.6g}", t, math.inf, self.tr)


def step_full_strang(u: ComplexField, t: float, dt: float, params: FiberParams,
                     dealias: bool = False) -> ComplexField:
    """One Strang step ``L(dt/2) N(dt) L(dt/2)`` of the full equation from ``t``."""
    if _crosses_breakpoint(t, dt, params.eps):
        raise StepAlignmentError(f"step [{t}, {t + dt}] crosses a dispersion/gain breakpoint")
    g = u.grid
    out = _strang(u.values, t, dt, params, g.xi2, _dealias_mask(g) if dealias else None)
    return ComplexField(g, out)


def _strang(u: np.ndarray, t: float, dt: float, params: FiberParams, xi2: np.ndarray,
            mask: np.ndarray | None) -> np.ndarray:
    half = t + 0.5 * dt
    m1 = np.exp(-1j * integral_d(t, half, params) * xi2)
    m2 = np.exp(-1j * integral_d(half, t + dt, params) * xi2)
    z = np.fft.ifft(m1 * np.fft.fft(u))
    ig = integral_G(t, t + dt, params)
    z = z * np.exp(1j * ig * (z.real**2 + z.imag**2))
    zh = np.fft.fft(z)
    if mask is not None:
        zh *= mask
    return np.fft.ifft(m2 * zh)


def solve_full(u0: ComplexField, params: FiberParams, cfg: SolveConfig) -> Trajectory:
    """Strang-split solution ``u`` on ``[0, t_end]``.

    The step is ``eps / steps_per_half_cell`` so breakpoints are step
    boundaries.  The trailing half linear step of one step and the leading one
    of the next are applied as a single multiplier, so each step costs one FFT
    round trip; snapshots are taken on a side copy and do not perturb the
    state.  Snapshots every ``snapshot_stride`` steps plus ``t = 0`` and
    ``t_end``; diagnostics are mass, H^1 norm and the transformed energy.
    """
    dt = params.eps / cfg.steps_per_half_cell
    n_steps = _step_count(cfg.t_end, dt)
    g = u0.grid
    xi2 = g.xi2
    mask = _dealias_mask(g) if cfg.dealias else None
    mon = _Monitor(g, cfg.snapshot_stride, cfg.growth_limit,
                   lambda f, t: _energy_of_u(f, t, params))
    mon.record(u0.values, 0.0)
    uh = np.fft.fft(u0.values)
    pending = 0.0  # linear phase owed from the previous step
    for j in range(n_steps):
        t = j * dt
        half = t + 0.5 * dt
        phase = pending + integral_d(t, half, params)
        z = np.fft.ifft(np.exp(-1j * phase * xi2) * uh)
        z *= np.exp(1j * integral_G(t, t + dt, params) * (z.real**2 + z.imag**2))
        uh = np.fft.fft(z)
        if mask is not None:
            uh *= mask
        pending = integral_d(half, t + dt, params)
        t1 = (j + 1) * dt
        if (j + 1) % cfg.snapshot_stride == 0 or j + 1 == n_steps:
            mon.record(np.fft.ifft(np.exp(-1j * pending * xi2) * uh), t1)
        else:
            mon.check_finite(z, t1)
    logger.debug("solve_full: %d steps, eps=%g", n_steps, params.eps)
    return mon.tr


def _rk4(what: str, v0: ComplexField, cfg: SolveConfig, d_av: float,
         rhs: Callable[[np.ndarray, float, float], np.ndarray],
         energy_fn: Callable[[ComplexField, float], float],
         breakpoint_eps: float | None = None) -> Trajectory:
    """Interaction-picture RK4 on raw FFT coefficients.

    ``rhs(what, t_n, tau)`` returns ``dw_hat/dt`` at ``s = t_n + tau`` for the
    local unknown ``w_hat``.
    """
    dt = cfg.dt
    n_steps = _step_count(cfg.t_end, dt)
    if breakpoint_eps is not None:
        ratio = breakpoint_eps / dt
        if abs(ratio - round(ratio)) > 1e-6 * ratio:
            raise StepAlignmentError(f"dt={dt} does not divide eps={breakpoint_eps}")
    g = v0.grid
    mask = _dealias_mask(g) if cfg.dealias else None
    half_prop = np.exp(-1j * d_av * 0.5 * dt * g.xi2)
    mon = _Monitor(g, cfg.snapshot_stride, cfg.growth_limit, energy_fn)
    vh = np.fft.fft(v0.values)
    mon.record(v0.values, 0.0)
    m0 = l2_norm(v0) ** 2
    for j in range(n_steps):
        t = j * dt
        k1 = rhs(vh, t, 0.0)
        k2 = rhs(vh + 0.5 * dt * k1, t, 0.5 * dt)
        k3 = rhs(vh + 0.5 * dt * k2, t, 0.5 * dt)
        k4 = rhs(vh + dt * k3, t, dt)
        # back from the local interaction picture: v_hat = T_{d_av dt} w_hat
        vh = half_prop * half_prop * (vh + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        if mask is not None:
            vh *= mask
        t1 = (j + 1) * dt
        if (j + 1) % cfg.snapshot_stride == 0 or j + 1 == n_steps:
            mon.record(np.fft.ifft(vh), t1)
        else:
            mon.check_finite(vh, t1)
    mf = mon.tr.mass[-1]
    if m0 > 0 and abs(mf - m0) / m0 > 100.0 * cfg.mass_drift_budget * cfg.t_end:
        raise StepSizeError(
            f"{what}: relative mass drift {abs(mf - m0) / m0:.3e} exceeds "
            f"100x budget ({cfg.mass_drift_budget:g}); reduce dt={dt}"
        )
    return mon.tr


def solve_averaged(v0: ComplexField, gamma: float, d_av: float, cfg: SolveConfig) -> Trajectory:
    """RK4 solution of the averaged equation; energy column is the averaged Hamiltonian."""
    g = v0.grid
    rule = cfg.quadrature
    xi2 = g.xi2

    def rhs(wh, t_n, tau):
        rot = np.exp(-1j * d_av * tau * xi2)
        q = Q_avg_hat(rot * wh, g, gamma, rule)
        return 1j * np.conj(rot) * q

    return _rk4("solve_averaged", v0, cfg, d_av, rhs,
                lambda f, t: averaged_energy(f, gamma, d_av, rule))


def _solve_transformed_rk4(u0: ComplexField, params: FiberParams, cfg: SolveConfig) -> Trajectory:
    g = u0.grid
    xi2 = g.xi2
    d_av, eps = params.d_av, params.eps

    def rhs(wh, t_n, tau):
        # all stages of a step use the profiles of the half-cell containing it
        cell = math.floor((t_n + 0.5 * cfg.dt) / eps)
        d_val, gain = fiber.local_profiles((t_n + tau) / eps, cell, params.gamma)
        ph = np.exp(-1j * (d_val + d_av * tau) * xi2)
        z = np.fft.ifft(ph * wh)
        return 1j * gain * np.conj(ph) * np.fft.fft(cubic(z))

    return _rk4("solve_transformed", u0, cfg, d_av, rhs,
                lambda f, t: energy(f, t, params), breakpoint_eps=eps)


def solve_transformed(u0: ComplexField, params: FiberParams, cfg: SolveConfig,
                      method: str = "pullback") -> Trajectory:
    """Trajectory of ``v_eps``.

    ``method="pullback"`` runs :func:`solve_full` and maps each snapshot through
    ``T_{-D(t/eps)}``; ``method="rk4"`` integrates the transformed equation
    directly with step ``cfg.dt`` (which must divide ``eps``).
    """
    if method == "rk4":
        return _solve_transformed_rk4(u0, params, cfg)
    if method != "pullback":
        raise ValueError(f"unknown method {method!r}")
    tr = solve_full(u0, params, cfg)
    # mass, H^1 and energy are invariant under the pull-back
    tr.snapshots = [pull_back(u, t, params) for u, t in zip(tr.snapshots, tr.times)]
    return tr


@dataclass
class EnergyResidualReport:
    max_residual: float
    n_intervals: int
    jumps: list[tuple[float, float]]


def _sobolev_flux(u: ComplexField) -> float:
    # Im < u_x, (|u|^2 u)_x >
    g = u.grid
    ux = np.fft.ifft(1j * g.frequencies * np.fft.fft(u.values))
    cx = np.fft.ifft(1j * g.frequencies * np.fft.fft(cubic(u.values)))
    return float(g.dx * np.vdot(cx, ux).imag)


def energy_derivative_residual(tr: Trajectory, params: FiberParams,
                               include_dispersion_term: bool = False) -> EnergyResidualReport:
    """Max deviation between finite-difference ``dE/dt`` and the loss term.

    For each pair of adjacent snapshots the forward difference of the energy
    is compared with the trapezoid average of ``-(1/4) d/dt[G(t/eps)] int |T_D v|^4``
    at the two ends.  Intervals touching an amplifier instant (``t/eps`` even)
    are skipped and the energy jump across them is reported instead.

    With ``include_dispersion_term`` the contribution of the time-dependent
    ``T_{D(t/eps)}`` is added, ``-(d0(t/eps)/eps) G Im<u_x, (|u|^2 u)_x>`` with
    ``u = T_D v``; without it the right side is the loss term alone.
    """
    eps, gamma = params.eps, params.gamma
    times = np.asarray(tr.times)
    E = np.asarray(tr.energy)
    us = [free_T(v, params.D(t)) for v, t in zip(tr.snapshots, tr.times)]
    quart = np.array([quartic_integral(u) for u in us])
    flux = np.array([_sobolev_flux(u) for u in us]) if include_dispersion_term else None

    def on_amp(t):
        s = t / eps / 2.0
        return abs(s - round(s)) < _ALIGN_TOL * max(1.0, abs(s))

    residuals = []
    jumps = []
    for k in range(len(times) - 1):
        ta, tb = times[k], times[k + 1]
        sa, sb = ta / eps, tb / eps
        # any amplifier instant in [ta, tb]? (closed on the right, open on the left
        # unless ta itself is one -- E(ta) is then the post-jump value and usable)
        if math.floor(sb / 2.0 - _ALIGN_TOL) > math.floor(sa / 2.0 + _ALIGN_TOL) or on_amp(tb):
            jumps.append((float(tb), float(E[k + 1] - E[k])))
            continue
        mid_cell = 0.5 * (sa + sb)
        cell = math.floor(mid_cell)
        _, ga = fiber.local_profiles(sa, cell, gamma)
        _, gb = fiber.local_profiles(sb, cell, gamma)
        # d/dt G(t/eps) = -(gamma/eps) G on cell interiors
        rhs_a = 0.25 * (gamma / eps) * ga * quart[k]
        rhs_b = 0.25 * (gamma / eps) * gb * quart[k + 1]
        rhs = 0.5 * (rhs_a + rhs_b)
        if flux is not None:
            sign = 1.0 if cell % 2 == 0 else -1.0
            rhs += -(sign / eps) * 0.5 * (ga * flux[k] + gb * flux[k + 1])
        dEdt = (E[k + 1] - E[k]) / (tb - ta)
        residuals.append(abs(dEdt - rhs))
    return EnergyResidualReport(
        max_residual=float(max(residuals, default=0.0)),
        n_intervals=len(residuals),
        jumps=jumps,
    )

"""Experiment orchestration: epsilon sweeps, Lipschitz probe, convergence checks.

All comparisons between two solvers happen at physical times both of them
land on exactly; no interpolation in time is ever done.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .fiber import FiberParams
from .grid import ComplexField, Trajectory, gaussian_profile, h1_norm, spectral_tail
from .nonlinearities import gauss_legendre
from .solvers import (
    BlowUpError,
    SolveConfig,
    energy_derivative_residual,
    solve_averaged,
    solve_full,
    solve_transformed,
)

logger = logging.getLogger(__name__)

__all__ = [
    "SweepResult",
    "SweepAbortedError",
    "ConvergenceResult",
    "LipschitzResult",
    "fit_slope",
    "common_sample_interval",
    "sup_h1_difference",
    "sweep_epsilon",
    "perturbed_sweep",
    "lipschitz_probe",
    "strang_self_convergence",
    "rk4_self_convergence",
    "transform_equivalence",
    "energy_residual_ladder",
    "default_perturbation",
]


def fit_slope(x, y) -> tuple[float, float]:
    """Least-squares ``(slope, intercept)`` of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


def common_sample_interval(dts, base: float, max_multiple: int = 10000) -> float:
    """Smallest positive multiple of ``base`` that every step in ``dts`` divides."""
    for m in range(1, max_multiple + 1):
        delta = m * base
        if all(abs(delta / dt - round(delta / dt)) < 1e-8 * (delta / dt) for dt in dts):
            return delta
    raise ValueError(f"no common sample interval for steps {list(dts)} and base {base}")


def sup_h1_difference(a: Trajectory, b: Trajectory) -> float:
    """``max_t ||a(t) - b(t)||_{H^1}`` over snapshots present in both (matched by time)."""
    tb = np.asarray(b.times)
    best = 0.0
    matched = 0
    for t, f in zip(a.times, a.snapshots):
        k = int(np.argmin(np.abs(tb - t)))
        if abs(tb[k] - t) <= 1e-9 * max(1.0, abs(t)):
            best = max(best, h1_norm(f - b.snapshots[k]))
            matched += 1
    if matched == 0:
        raise ValueError("trajectories share no snapshot times")
    return best


@dataclass
class SweepResult:
    eps_values: np.ndarray
    errors: np.ndarray
    slope: float
    intercept: float
    sample_interval: float
    # relative change of the errors when the comparison grid is coarsened 2x
    stride_sensitivity: float
    inversions: list[tuple[float, float]] = field(default_factory=list)
    initial_distances: np.ndarray | None = None
    hypothesis_violations: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.eps_values) != len(self.errors) or len(self.errors) < 3:
            raise ValueError("a sweep needs at least 3 (eps, error) pairs")
        if not np.all(np.isfinite(self.errors)):
            raise ValueError("non-finite sweep errors")

    @property
    def constant(self) -> float:
        """Empirical ``C`` in ``error ~ C eps``."""
        return math.exp(self.intercept)


class SweepAbortedError(RuntimeError):
    def __init__(self, msg: str, partial: list[tuple[float, float]]):
        super().__init__(msg)
        self.partial = partial


def default_perturbation(cfg: RunConfig) -> ComplexField:
    """Shifted narrow Gaussian bump normalized to unit H^1 norm."""
    g = gaussian_profile(cfg.grid, 1.0, 0.5 * cfg.width, cfg.center + 1.0)
    return g * (1.0 / h1_norm(g))


def _sweep_one(args):
    u0, params, scfg = args
    return solve_transformed(u0, params, scfg)


def _validate_eps_list(eps_list) -> np.ndarray:
    eps = np.asarray(eps_list, dtype=float)
    if eps.size < 3:
        raise ValueError("need at least 3 eps values to fit a slope")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps values must be strictly decreasing")
    if eps[0] > 0.25 or eps[-1] <= 0:
        raise ValueError("eps values must lie in (0, 0.25]")
    return eps


def _sweep(cfg: RunConfig, eps_list, perturbation: ComplexField | None, scale: float,
           workers: int) -> SweepResult:
    eps = _validate_eps_list(eps_list)
    v0 = cfg.initial_field()
    k = cfg.steps_per_half_cell
    full_dts = [e / k for e in eps]
    delta = common_sample_interval(full_dts, cfg.dt)
    avg_cfg = cfg.solve_config(snapshot_stride=round(delta / cfg.dt))
    ref = solve_averaged(v0, cfg.gamma, cfg.d_av, avg_cfg)

    jobs = []
    dists = []
    violations = []
    for e, dt in zip(eps, full_dts):
        u0 = v0
        if perturbation is not None:
            u0 = v0 + perturbation * (scale * e)
        d = h1_norm(u0 - v0)
        dists.append(d)
        if d > e * (1.0 + 1e-12):
            violations.append(float(e))
            logger.warning("eps=%g: ||u0 - v0||_H1 = %.3g exceeds eps (hypothesis-violating)", e, d)
        jobs.append((u0, FiberParams(float(e), cfg.gamma, cfg.d_av),
                     cfg.solve_config(snapshot_stride=round(delta / dt))))

    partial: list[tuple[float, float]] = []
    errors = []
    coarse = []
    try:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                trs = list(pool.map(_sweep_one, jobs))
        else:
            trs = (_sweep_one(j) for j in jobs)
        for e, tr in zip(eps, trs):
            err = sup_h1_difference(tr, ref)
            every_other = Trajectory(tr.times[::2], tr.snapshots[::2], tr.mass[::2],
                                     tr.h1[::2], tr.energy[::2])
            coarse.append(sup_h1_difference(every_other, ref))
            errors.append(err)
            partial.append((float(e), err))
            logger.info("eps=%g  sup H1 error=%.6e", e, err)
    except BlowUpError as exc:
        raise SweepAbortedError(f"sweep aborted: {exc}", partial) from exc

    errors = np.asarray(errors)
    slope, intercept = fit_slope(eps, errors)
    sens = float(np.max(np.abs(errors - np.asarray(coarse)) / errors))
    inversions = [(float(eps[i + 1]), float(errors[i + 1]))
                  for i in range(len(errors) - 1) if errors[i + 1] > errors[i]]
    return SweepResult(eps, errors, slope, intercept, delta, sens, inversions,
                       np.asarray(dists), violations)


def sweep_epsilon(cfg: RunConfig, eps_list, workers: int = 1) -> SweepResult:
    """Distance between transformed and averaged solutions from the same datum.

    One averaged solve, then one transformed solve per ``eps``; the error is
    the sup over shared snapshot times of the H^1 difference, and the slope is
    the least-squares fit of log error against log eps.
    """
    return _sweep(cfg, eps_list, None, 0.0, workers)


def perturbed_sweep(cfg: RunConfig, eps_list, delta_profile: ComplexField | None = None,
                    scale: float = 1.0, workers: int = 1) -> SweepResult:
    """As :func:`sweep_epsilon` but with ``u0 = v0 + scale * eps * g``, ``||g||_{H^1} = 1``.

    ``scale > 1`` violates the ``||u0 - v0|| <= eps`` hypothesis; the run
    proceeds and the offending eps values are listed in
    ``hypothesis_violations``.
    """
    if delta_profile is None:
        delta_profile = default_perturbation(cfg)
    norm = h1_norm(delta_profile)
    g = delta_profile * (1.0 / norm) if norm > 0 else delta_profile
    return _sweep(cfg, eps_list, g, scale, workers)


@dataclass
class LipschitzResult:
    deltas: np.ndarray
    differences: np.ndarray
    ratios: np.ndarray
    # ||difference(t_end)|| / delta; the sup is often attained at t = 0
    final_ratios: np.ndarray | None = None

    @property
    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.deltas.tolist(), self.differences.tolist(), self.ratios.tolist()))

    @property
    def stabilized(self) -> bool:
        """Last two finite ratios within 20% of each other."""
        r = self.ratios[np.isfinite(self.ratios)]
        return len(r) >= 2 and abs(r[-1] - r[-2]) <= 0.2 * abs(r[-2])

    @property
    def nongrowing(self) -> bool:
        r = self.ratios[np.isfinite(self.ratios)]
        return bool(np.all(r[1:] <= r[:-1] * 1.2))


def lipschitz_probe(cfg: RunConfig, deltas, direction: ComplexField | None = None) -> LipschitzResult:
    """``sup_t ||v(v0 + delta g) - v(v0)||_{H^1} / delta`` for each delta."""
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas < 0) or np.any(np.diff(deltas) >= 0):
        raise ValueError("deltas must be non-negative and strictly decreasing")
    g = direction if direction is not None else default_perturbation(cfg)
    v0 = cfg.initial_field()
    params = cfg.fiber
    scfg = cfg.solve_config()
    base = solve_transformed(v0, params, scfg)
    diffs, ratios, finals = [], [], []
    for d in deltas:
        if d == 0.0:
            diffs.append(0.0)
            ratios.append(math.nan)
            finals.append(math.nan)
            continue
        tr = solve_transformed(v0 + g * d, params, scfg)
        diff = sup_h1_difference(tr, base)
        diffs.append(diff)
        ratios.append(diff / d)
        finals.append(h1_norm(tr.snapshots[-1] - base.snapshots[-1]) / d)
    return LipschitzResult(deltas, np.asarray(diffs), np.asarray(ratios), np.asarray(finals))


@dataclass
class ConvergenceResult:
    steps: np.ndarray
    errors: np.ndarray
    slope: float
    reference_tail: float = 0.0
    seconds: float = 0.0


def strang_self_convergence(u0: ComplexField, params: FiberParams, t_end: float = 1.0,
                            steps_per_half_cell=(10, 20, 40)) -> ConvergenceResult:
    """Order of the full solver against a run at a quarter of the finest step."""
    t0 = time.perf_counter()
    ks = list(steps_per_half_cell)
    kref = 4 * max(ks)
    ref = solve_full(u0, params, SolveConfig(t_end=t_end, steps_per_half_cell=kref,
                                             snapshot_stride=kref))
    errs = []
    for k in ks:
        tr = solve_full(u0, params, SolveConfig(t_end=t_end, steps_per_half_cell=k,
                                                snapshot_stride=k))
        errs.append(sup_h1_difference(tr, ref))
    dts = np.array([params.eps / k for k in ks])
    slope, _ = fit_slope(dts, errs)
    return ConvergenceResult(dts, np.asarray(errs), slope,
                             spectral_tail(ref.snapshots[-1]), time.perf_counter() - t0)


def rk4_self_convergence(v0: ComplexField, gamma: float, d_av: float, t_end: float = 1.0,
                         dts=(4e-3, 2e-3, 1e-3), quad_nodes: int = 32) -> ConvergenceResult:
    """Order of the averaged solver against a run at a quarter of the finest step."""
    t0 = time.perf_counter()
    rule = gauss_legendre(quad_nodes)
    dts = list(dts)
    dref = min(dts) / 4.0
    delta = common_sample_interval(dts, dref)
    ref = solve_averaged(v0, gamma, d_av, SolveConfig(t_end=t_end, dt=dref, quadrature=rule,
                                                      snapshot_stride=round(delta / dref)))
    errs = []
    for dt in dts:
        tr = solve_averaged(v0, gamma, d_av, SolveConfig(t_end=t_end, dt=dt, quadrature=rule,
                                                         snapshot_stride=round(delta / dt)))
        errs.append(sup_h1_difference(tr, ref))
    slope, _ = fit_slope(dts, errs)
    return ConvergenceResult(np.asarray(dts), np.asarray(errs), slope,
                             spectral_tail(ref.snapshots[-1]), time.perf_counter() - t0)


def transform_equivalence(u0: ComplexField, params: FiberParams, t_end: float = 1.0,
                          dt: float = 1e-3, refine: int = 8) -> tuple[float, float]:
    """``(sup H^1 gap, tolerance)`` between the pull-back and RK4 routes to ``v_eps``.

    The pull-back route runs the splitting at ``dt / refine``; the tolerance is
    ``max(5e-7, 10 dt^2)`` with ``dt`` the RK4 step.
    """
    k = round(refine * params.eps / dt)
    if abs(k * dt - refine * params.eps) > 1e-9 * params.eps:
        raise ValueError(f"dt={dt} must divide eps={params.eps}")
    rk = solve_transformed(u0, params, SolveConfig(t_end=t_end, dt=dt, snapshot_stride=1),
                           method="rk4")
    pb = solve_transformed(u0, params, SolveConfig(t_end=t_end, steps_per_half_cell=k,
                                                   snapshot_stride=refine))
    return sup_h1_difference(pb, rk), max(5e-7, 10.0 * dt * dt)


def energy_residual_ladder(u0: ComplexField, params: FiberParams, t_end: float = 1.0,
                           steps_per_half_cell=(20, 40), include_dispersion_term: bool = True):
    """Energy-derivative residuals of the full solver at successive step halvings.

    Returns ``(residuals, ratios, jumps)``; ``ratios[i] = residuals[i] / residuals[i+1]``.
    """
    res = []
    jumps = None
    for k in steps_per_half_cell:
        tr = solve_transformed(u0, params, SolveConfig(t_end=t_end, steps_per_half_cell=k))
        rep = energy_derivative_residual(tr, params, include_dispersion_term)
        res.append(rep.max_residual)
        jumps = rep.jumps
    res = np.asarray(res)
    return res, res[:-1] / res[1:], jumps

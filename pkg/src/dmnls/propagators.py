"""Exact linear propagators as Fourier multipliers.

``free_T(f, t)`` is the free Schroedinger group ``exp(i t d_x^2)``, i.e. the
multiplier ``exp(-i t xi^2)``.  The dispersion-managed propagator
``U(t0, t1)`` only depends on the accumulated dispersion, so it is one free
propagation by ``int_{t0}^{t1} d``.
"""

from __future__ import annotations

import math

import numpy as np

from .fiber import FiberParams, integral_d
from .grid import ComplexField, lp_norm

__all__ = [
    "ResonantCellError",
    "free_T",
    "linear_U",
    "dispersive_decay_probe",
    "phase_multiplier",
]


class ResonantCellError(ValueError):
    """Accumulated dispersion vanishes, so no dispersive decay can be claimed."""


def phase_multiplier(xi2: np.ndarray, phase: float) -> np.ndarray:
    return np.exp(-1j * phase * xi2)


def free_T(f: ComplexField, t: float) -> ComplexField:
    if t == 0.0:
        return f.copy()
    g = f.grid
    return ComplexField(g, np.fft.ifft(phase_multiplier(g.xi2, t) * np.fft.fft(f.values)))


def linear_U(f: ComplexField, t0: float, t1: float, params: FiberParams) -> ComplexField:
    return free_T(f, integral_d(t0, t1, params))


def dispersive_decay_probe(
    f: ComplexField, t0: float, t1: float, params: FiberParams, rtol: float = 1e-12
) -> float:
    """Ratio of ``||U(t0,t1) f||_inf`` to the exact kernel bound.

    The bound is ``||f||_1 / sqrt(4 pi |int d|)``; a ratio above 1 means the
    discrete propagator beats the continuum estimate.  Only pairs within one
    dispersion half-cell (``floor(t0/eps) == floor(t1/eps)``) are accepted.
    """
    eps = params.eps
    if math.floor(t0 / eps) != math.floor(t1 / eps):
        raise ValueError("t0 and t1 must lie in the same dispersion half-cell")
    phase = integral_d(t0, t1, params)
    scale = abs(t1 - t0) * (abs(params.d_av) + 1.0 / eps)
    if t1 == t0 or abs(phase) <= rtol * scale:
        raise ResonantCellError(
            f"int d over [{t0}, {t1}] vanishes (d_av={params.d_av}, eps={eps}); "
            "this is the excluded case d_av = +-1/eps on a resonant half-cell"
        )
    l1 = lp_norm(f, 1)
    if l1 == 0.0:
        return 0.0
    sup = lp_norm(linear_U(f, t0, t1, params), math.inf)
    return sup * math.sqrt(4.0 * math.pi * abs(phase)) / l1

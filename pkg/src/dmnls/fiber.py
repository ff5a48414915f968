"""Dispersion map and lumped-amplification gain of a dispersion-managed fiber.

Cell-time ``s = t / eps`` is used for the periodic profiles:

* ``d0(s)``: +1 on ``[0, 1)``, -1 on ``[1, 2)``, 2-periodic;
* ``D(s)``: its antiderivative, a triangle wave between 0 and 1;
* ``G(s)``: ``exp(-gamma * (s mod 2))``, reset to 1 by the amplifier at every
  even ``s``;
* ``psi(r) = exp(-gamma) cosh(gamma (r - 1))``: the kernel obtained from the
  period average of ``G(s) f(D(s))`` after substituting ``r = D(s)``.

All breakpoint values are right-continuous.  Integrals over physical time are
evaluated in closed form so solvers never sample the profiles.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FiberParams",
    "d0",
    "D",
    "gain_G",
    "psi",
    "psi_integral",
    "integral_d",
    "integral_G",
    "local_profiles",
    "perturbed_gain_normalization",
]

# Test hook: multiplies the gain at the start of each cell.  1.0 is the only
# value consistent with psi; anything else models counting the amplifier atom
# at the origin twice.
_gain_scale = 1.0


@contextlib.contextmanager
def perturbed_gain_normalization(scale: float):
    """Temporarily rescale G (negative control for the kernel identity)."""
    global _gain_scale
    old = _gain_scale
    _gain_scale = float(scale)
    try:
        yield
    finally:
        _gain_scale = old


@dataclass(frozen=True)
class FiberParams:
    eps: float
    gamma: float = 0.0
    d_av: float = 0.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    def d(self, t: float) -> float:
        """Full dispersion ``d_av + d0(t/eps)/eps``."""
        return self.d_av + d0(t / self.eps) / self.eps

    def G(self, t: float) -> float:
        return gain_G(t / self.eps, self.gamma)

    def D(self, t: float) -> float:
        return D(t / self.eps)


_SNAP = 1e-11


def _snap(s):
    # t = j * dt lands a few ulps off a breakpoint; pull it onto the integer
    r = np.round(s)
    return np.where(np.abs(s - r) <= _SNAP * np.maximum(1.0, np.abs(s)), r, s)


def _mod2(s):
    return np.mod(_snap(np.asarray(s, dtype=float)), 2.0)


def d0(s):
    """Two-step zero-mean dispersion profile."""
    out = np.where(_mod2(s) < 1.0, 1.0, -1.0)
    return float(out) if np.ndim(out) == 0 else out


def D(s):
    r = _mod2(s)
    out = np.where(r <= 1.0, r, 2.0 - r)
    return float(out) if np.ndim(out) == 0 else out


def gain_G(s, gamma: float):
    out = _gain_scale * np.exp(-gamma * _mod2(s))
    return float(out) if np.ndim(out) == 0 else out


def psi(r, gamma: float):
    r_arr = np.asarray(r, dtype=float)
    if np.any((r_arr < 0.0) | (r_arr > 1.0)):
        raise ValueError("psi is defined for r in [0, 1]")
    out = math.exp(-gamma) * np.cosh(gamma * (r_arr - 1.0))
    return float(out) if np.ndim(out) == 0 else out


def psi_integral(gamma: float) -> float:
    """``int_0^1 psi(r) dr = (1 - exp(-2 gamma)) / (2 gamma)``."""
    if gamma == 0.0:
        return 1.0
    return -math.expm1(-2.0 * gamma) / (2.0 * gamma)


def local_profiles(s: float, half_cell: int, gamma: float) -> tuple[float, float]:
    """``(D(s), G(s))`` continued from inside the given half-cell ``[k, k+1)``.

    At ``s = k + 1`` this returns the left limits, which the right-continuous
    point evaluations cannot provide.
    """
    k = int(half_cell)
    sign = 1.0 if k % 2 == 0 else -1.0
    d = (0.0 if k % 2 == 0 else 1.0) + sign * (s - k)
    start = 2 * (k // 2)
    return d, _gain_scale * math.exp(-gamma * (s - start))


def integral_d(t0: float, t1: float, params: FiberParams) -> float:
    """Exact ``int_{t0}^{t1} d(t) dt``.

    The fast part integrates to ``D(t1/eps) - D(t0/eps)`` (the 1/eps amplitude
    and the eps time scale cancel).
    """
    eps = params.eps
    return params.d_av * (t1 - t0) + (D(t1 / eps) - D(t0 / eps))


def _loss_factor(x: float) -> float:
    # (1 - exp(-x)) / x, with its limit 1 once x underflows
    return 1.0 if x == 0.0 else -math.expm1(-x) / x


def _gain_antiderivative(s: float, gamma: float) -> float:
    # int_0^s G, accumulated over whole cells plus the partial cell
    cells = math.floor(s / 2.0)
    rem = s - 2.0 * cells
    return cells * 2.0 * _loss_factor(2.0 * gamma) + rem * _loss_factor(gamma * rem)


def integral_G(t0: float, t1: float, params: FiberParams) -> float:
    """Exact ``int_{t0}^{t1} G(t/eps) dt``."""
    if t1 < t0:
        raise ValueError(f"integral_G needs t0 <= t1, got [{t0}, {t1}]")
    if t1 == t0:
        return 0.0
    eps, gamma = params.eps, params.gamma
    s0, s1 = t0 / eps, t1 / eps
    if math.floor(s0 / 2.0) == math.floor(s1 / 2.0):
        # same cell: avoid cancellation between the two antiderivative values
        r0 = s0 - 2.0 * math.floor(s0 / 2.0)
        val = math.exp(-gamma * r0) * (s1 - s0) * _loss_factor(gamma * (s1 - s0))
    else:
        val = _gain_antiderivative(s1, gamma) - _gain_antiderivative(s0, gamma)
    return _gain_scale * eps * val

"""Periodic 1-D grid, physically normalized DFT, and the norms used throughout.

The real line is replaced by the periodic box ``[-L/2, L/2)`` sampled at
``n`` points.  Fourier transforms use the convention

    f_hat(xi_k) = dx / sqrt(2 pi) * sum_j f(x_j) exp(-i xi_k x_j),

which is the rectangle-rule discretization of the continuum transform
``(2 pi)^(-1/2) int exp(-i x xi) f(x) dx``.  With ``dxi = 2 pi / L`` this makes
Parseval exact on the lattice: ``sum |f|^2 dx == sum |f_hat|^2 dxi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "SpatialGrid",
    "ComplexField",
    "Trajectory",
    "DomainTooSmallError",
    "dft_forward",
    "dft_inverse",
    "l2_norm",
    "h1_norm",
    "lp_norm",
    "mixed_norm",
    "gaussian_profile",
    "spectral_tail",
]

EDGE_DECAY = 1e-14


class DomainTooSmallError(ValueError):
    """Initial profile does not decay to the edge threshold inside the box."""


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid on ``[-length/2, length/2)`` with ``n`` samples."""

    n: int
    length: float

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError(f"length must be positive and finite, got {self.length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dxi(self) -> float:
        return 2.0 * math.pi / self.length

    @cached_property
    def x(self) -> np.ndarray:
        x = -0.5 * self.length + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies in DFT order; the Nyquist bin carries ``+pi n / L``."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        k[self.n // 2] = self.n // 2
        xi = self.dxi * k
        xi.flags.writeable = False
        return xi

    @cached_property
    def xi2(self) -> np.ndarray:
        xi2 = self.frequencies**2
        xi2.flags.writeable = False
        return xi2

    @cached_property
    def _shift(self) -> np.ndarray:
        # exp(-i xi_k x_0) with x_0 = -L/2 reduces to (-1)^k
        s = np.where(np.arange(self.n) % 2 == 0, 1.0, -1.0)
        s.flags.writeable = False
        return s

    def zeros(self) -> "ComplexField":
        return ComplexField(self, np.zeros(self.n, dtype=complex))


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples of ``u`` or ``v`` on a grid at one instant.

    Supports the linear-space operations needed by the solvers and tests
    (``+``, ``-``, scalar ``*``).
    """

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.copy())

    def _check(self, other: "ComplexField") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "ComplexField") -> "ComplexField":
        self._check(other)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        self._check(other)
        return ComplexField(self.grid, self.values - other.values)

    def __mul__(self, c: complex) -> "ComplexField":
        return ComplexField(self.grid, c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "ComplexField":
        return ComplexField(self.grid, -self.values)


@dataclass
class Trajectory:
    """Snapshots of a solution with the scalar diagnostics recorded alongside."""

    times: list[float] = field(default_factory=list)
    snapshots: list[ComplexField] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    h1: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)

    def append(self, t: float, f: ComplexField, mass: float, h1: float, energy: float) -> None:
        if self.times and t <= self.times[-1]:
            raise ValueError("trajectory times must be strictly increasing")
        self.times.append(float(t))
        self.snapshots.append(f)
        self.mass.append(float(mass))
        self.h1.append(float(h1))
        self.energy.append(float(energy))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def grid(self) -> SpatialGrid:
        return self.snapshots[0].grid

    def truncated(self, t_max: float) -> "Trajectory":
        """Sub-trajectory with ``times <= t_max``."""
        k = int(np.searchsorted(self.times, t_max, side="right"))
        return Trajectory(
            self.times[:k], self.snapshots[:k], self.mass[:k], self.h1[:k], self.energy[:k]
        )

    def diagnostics_table(self) -> np.ndarray:
        return np.column_stack([self.times, self.mass, self.h1, self.energy])


def dft_forward(f: ComplexField) -> np.ndarray:
    """Frequency samples ``f_hat(xi_k)`` in DFT order (see module docstring)."""
    g = f.grid
    return (g.dx / math.sqrt(2.0 * math.pi)) * g._shift * np.fft.fft(f.values)


def dft_inverse(fhat: np.ndarray, grid: SpatialGrid) -> ComplexField:
    fhat = np.asarray(fhat, dtype=complex)
    vals = np.fft.ifft(fhat * grid._shift) * (math.sqrt(2.0 * math.pi) / grid.dx)
    return ComplexField(grid, vals)


def l2_norm(f: ComplexField) -> float:
    return math.sqrt(f.grid.dx * float(np.vdot(f.values, f.values).real))


def h1_norm(f: ComplexField) -> float:
    fhat = dft_forward(f)
    w = 1.0 + f.grid.xi2
    return math.sqrt(f.grid.dxi * float(np.sum(w * (fhat.real**2 + fhat.imag**2))))


def lp_norm(f: ComplexField, p: float) -> float:
    """Rectangle-rule ``L^p`` norm; ``p = inf`` gives the grid maximum."""
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max(initial=0.0))
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float((f.grid.dx * np.sum(a**p)) ** (1.0 / p))


def mixed_norm(tr: Trajectory, p: float, q: float) -> float:
    """``L^q_t L^p_x`` norm over the snapshot times, trapezoid rule in time."""
    if len(tr) == 0:
        raise ValueError("empty trajectory")
    inner = np.array([lp_norm(f, p) for f in tr.snapshots])
    if math.isinf(q):
        return float(inner.max())
    if len(tr) < 2:
        raise ValueError("mixed_norm with finite q needs at least 2 snapshots")
    return float(np.trapezoid(inner**q, np.asarray(tr.times)) ** (1.0 / q))


def gaussian_profile(
    grid: SpatialGrid,
    amplitude: float = 1.0,
    width: float = 1.0,
    center: float = 0.0,
    chirp: float = 0.0,
) -> ComplexField:
    """``a exp(-(x-x0)^2 / (2 w^2)) exp(i c (x-x0)^2)`` sampled on ``grid``."""
    if amplitude < 0 or width <= 0:
        raise ValueError("amplitude must be >= 0 and width > 0")
    if amplitude == 0:
        return grid.zeros()
    half = 0.5 * grid.length
    edge = min(half - center, half + center)
    if edge <= 0 or math.exp(-(edge**2) / (2.0 * width**2)) > EDGE_DECAY:
        raise DomainTooSmallError(
            f"Gaussian of width {width} at {center} does not decay below {EDGE_DECAY:g} "
            f"inside a box of length {grid.length}"
        )
    y = grid.x - center
    vals = amplitude * np.exp(-(y**2) / (2.0 * width**2))
    if chirp:
        vals = vals * np.exp(1j * chirp * y**2)
    return ComplexField(grid, vals)


def spectral_tail(f: ComplexField, fraction: float = 1.0 / 3.0) -> float:
    """Share of the L^2 norm carried by modes with ``|k| > fraction * n``.

    A resolution diagnostic: well-resolved fields have a negligible tail.
    """
    fh = np.fft.fft(f.values)
    k = np.abs(np.fft.fftfreq(f.grid.n, d=1.0 / f.grid.n))
    p = fh.real**2 + fh.imag**2
    total = float(p.sum())
    if total == 0.0:
        return 0.0
    return math.sqrt(float(p[k > fraction * f.grid.n].sum()) / total)

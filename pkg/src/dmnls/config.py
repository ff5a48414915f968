"""Run configuration and the ``key = value`` config-file format."""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass

from .fiber import FiberParams
from .grid import ComplexField, SpatialGrid, gaussian_profile
from .nonlinearities import gauss_legendre
from .solvers import SolveConfig

__all__ = ["RunConfig", "ConfigError", "parse_config_file", "ALIASES"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # grid
    n: int = 512
    length: float = 16.0 * math.pi
    # fiber
    eps: float = 0.1
    gamma: float = 0.0
    d_av: float = 0.5
    # initial datum: Gaussian profile unless ``initial`` names a snapshot file
    amplitude: float = 1.0
    width: float = 1.0
    center: float = 0.0
    chirp: float = 0.0
    initial: str | None = None
    # time stepping
    t_end: float = 1.0
    dt: float = 1e-3
    steps_per_half_cell: int = 20
    quad_nodes: int = 32
    snapshot_stride: int = 1
    dealias: bool = False
    equation: str = "full"
    out: str = "out"
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigError(f"n must be a power of two >= 8, got {self.n}")
        if self.length <= 0 or self.eps <= 0 or self.gamma < 0:
            raise ConfigError("need length > 0, eps > 0, gamma >= 0")
        if self.t_end <= 0 or self.dt <= 0:
            raise ConfigError("need tmax > 0 and dt > 0")
        if self.steps_per_half_cell < 1 or self.quad_nodes < 1 or self.snapshot_stride < 1:
            raise ConfigError("steps-per-half-cell, quad-nodes and snapshot-stride must be >= 1")
        if self.equation not in ("full", "transformed", "averaged"):
            raise ConfigError(f"unknown equation {self.equation!r}")
        if self.initial is not None and not os.access(self.initial, os.R_OK):
            raise ConfigError(f"initial snapshot {self.initial!r} is not readable")

    @property
    def grid(self) -> SpatialGrid:
        return SpatialGrid(self.n, self.length)

    @property
    def fiber(self) -> FiberParams:
        return FiberParams(self.eps, self.gamma, self.d_av)

    def with_(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def solve_config(self, **overrides) -> SolveConfig:
        kw = dict(
            t_end=self.t_end,
            steps_per_half_cell=self.steps_per_half_cell,
            dt=self.dt,
            snapshot_stride=self.snapshot_stride,
            quadrature=gauss_legendre(self.quad_nodes),
            dealias=self.dealias,
        )
        kw.update(overrides)
        return SolveConfig(**kw)

    def initial_field(self) -> ComplexField:
        if self.initial is not None:
            from .snapshot import snapshot_read

            f, _ = snapshot_read(self.initial)
            if f.grid != self.grid:
                raise ConfigError(
                    f"snapshot grid (n={f.grid.n}, length={f.grid.length}) does not match "
                    f"configured grid (n={self.n}, length={self.length})"
                )
            return f
        return gaussian_profile(self.grid, self.amplitude, self.width, self.center, self.chirp)


# file/CLI spellings -> RunConfig field names
ALIASES = {
    "dav": "d_av",
    "tmax": "t_end",
    "steps-per-half-cell": "steps_per_half_cell",
    "quad-nodes": "quad_nodes",
    "snapshot-stride": "snapshot_stride",
}

_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    default = _FIELDS[name].default
    if name == "initial":
        return raw or None
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config_file(path: str | os.PathLike) -> dict:
    """Read ``key = value`` lines (UTF-8, ``#`` comments) into RunConfig kwargs.

    Unknown keys raise :class:`ConfigError`; ``eps`` may be a comma list, which
    is returned under the extra key ``eps_list``.
    """
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lower()
            name = ALIASES.get(key, key.replace("-", "_"))
            if name == "eps" and "," in value:
                out["eps_list"] = [float(v) for v in value.split(",") if v.strip()]
                continue
            if name not in _FIELDS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[name] = _coerce(name, value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return out

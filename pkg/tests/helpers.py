import numpy as np

from dmnls.grid import ComplexField, SpatialGrid, gaussian_profile


def random_field(grid: SpatialGrid, rng) -> ComplexField:
    return ComplexField(grid, rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n))


def smooth_random_field(grid: SpatialGrid, rng, bumps: int = 3) -> ComplexField:
    """Sum of a few chirped Gaussians; well resolved on a 16*pi box."""
    out = grid.zeros()
    for _ in range(bumps):
        a = rng.uniform(0.2, 1.0)
        w = rng.uniform(0.7, 1.5)
        c = rng.uniform(-3.0, 3.0)
        chirp = rng.uniform(-0.2, 0.2)
        phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
        out = out + gaussian_profile(grid, a, w, c, chirp) * phase
    return out


def mode(grid: SpatialGrid, k: int, amplitude: complex = 1.0) -> ComplexField:
    xi = grid.frequencies[k]
    return ComplexField(grid, amplitude * np.exp(1j * xi * grid.x))

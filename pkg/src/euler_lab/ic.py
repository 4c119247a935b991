"""Initial-condition library: canonical vortex fields and seeded random data.

Every builder returns a spectral-space velocity that is divergence-free,
zero-mean, and dealiased, ready for the integrator.
"""

from __future__ import annotations

import numpy as np

from .errors import UsageError
from .spectral import (
    Grid3,
    SpectralField3,
    curl,
    dealias,
    leray_project,
    to_spectral,
    zero_mean,
)


def _prepare(u: SpectralField3) -> SpectralField3:
    return zero_mean(leray_project(dealias(to_spectral(u))))


def taylor_green(grid: Grid3, amplitude: float = 1.0) -> SpectralField3:
    """u = A (sin x cos y cos z, -cos x sin y cos z, 0); ||u||_L2^2 = 2 A^2 pi^3
    on the 2 pi box."""
    x, y, z = grid.coords
    u = amplitude * np.stack(
        [
            np.sin(x) * np.cos(y) * np.cos(z),
            -np.cos(x) * np.sin(y) * np.cos(z),
            np.zeros_like(x),
        ]
    )
    return _prepare(SpectralField3.from_physical(grid, u))


def taylor_green_vorticity(grid: Grid3, amplitude: float = 1.0) -> SpectralField3:
    """Closed-form curl of the Taylor-Green velocity (test oracle)."""
    x, y, z = grid.coords
    w = amplitude * np.stack(
        [
            -np.cos(x) * np.sin(y) * np.sin(z),
            -np.sin(x) * np.cos(y) * np.sin(z),
            2.0 * np.sin(x) * np.sin(y) * np.cos(z),
        ]
    )
    return to_spectral(SpectralField3.from_physical(grid, w))


def taylor_green_pressure(grid: Grid3, amplitude: float = 1.0) -> SpectralField3:
    """Closed-form initial pressure (1/16)(cos 2x + cos 2y)(cos 2z + 2)."""
    x, y, z = grid.coords
    p = (amplitude**2 / 16.0) * (np.cos(2 * x) + np.cos(2 * y)) * (np.cos(2 * z) + 2.0)
    return to_spectral(SpectralField3.from_physical(grid, p))


def abc_flow(grid: Grid3, a: float = 1.0, b: float = 1.0, c: float = 1.0):
    """Beltrami field (A sin z + C cos y, B sin x + A cos z, C sin y + B cos x)."""
    x, y, z = grid.coords
    u = np.stack(
        [
            a * np.sin(z) + c * np.cos(y),
            b * np.sin(x) + a * np.cos(z),
            c * np.sin(y) + b * np.cos(x),
        ]
    )
    return _prepare(SpectralField3.from_physical(grid, u))


def random_band_limited(
    grid: Grid3,
    seed: int,
    k_min: float = 1.0,
    k_max: float = 3.0,
    amplitude: float = 1.0,
) -> SpectralField3:
    """Seeded solenoidal velocity supported on k_min <= |k| <= k_max.

    Built from physical white noise so the coefficients are Hermitian by
    construction, then band-masked, projected, and rescaled to the target
    L2 norm.  Deterministic in the seed.
    """
    if k_max < k_min or k_min < 0:
        raise UsageError(f"invalid band [{k_min}, {k_max}]")
    if k_max > grid.n / 3.0:
        raise UsageError(
            f"band top {k_max} exceeds the dealiased range n/3 = {grid.n / 3:.1f}"
        )
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((3, grid.n, grid.n, grid.n))
    uh = to_spectral(SpectralField3.from_physical(grid, noise))
    kk = np.sqrt(grid.k_sq)
    band = (kk >= k_min) & (kk <= k_max)
    u = SpectralField3.from_coefficients(grid, uh.data * band)
    u = _prepare(u)
    norm = float(np.sqrt(grid.volume * np.sum(np.abs(u.data) ** 2)))
    if norm == 0.0:
        raise UsageError("band contains no lattice modes; widen [k_min, k_max]")
    return SpectralField3.from_coefficients(grid, u.data * (amplitude / norm))


def random_vorticity(
    grid: Grid3, seed: int, k_min: float = 1.0, k_max: float = 6.0
) -> SpectralField3:
    """Seeded divergence-free, zero-mean vorticity (curl of a random field)."""
    u = random_band_limited(grid, seed, k_min, k_max)
    return curl(u)


def make_initial(kind: str, grid: Grid3, **params) -> SpectralField3:
    """Dispatch by name: taylor_green | abc | random (alias random_bandlimited)."""
    if kind == "taylor_green":
        return taylor_green(grid, amplitude=params.get("amplitude", 1.0))
    if kind == "abc":
        return abc_flow(
            grid,
            a=params.get("a", 1.0),
            b=params.get("b", 1.0),
            c=params.get("c", 1.0),
        )
    if kind in ("random", "random_bandlimited"):
        if "seed" not in params or params["seed"] is None:
            raise UsageError("random initial data requires an explicit seed")
        return random_band_limited(
            grid,
            seed=int(params["seed"]),
            k_min=params.get("k_min", 1.0),
            k_max=params.get("k_max", 3.0),
            amplitude=params.get("amplitude", 1.0),
        )
    raise UsageError(f"unknown initial condition {kind!r}")

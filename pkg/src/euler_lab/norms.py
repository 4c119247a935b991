"""Norms and scale diagnostics: sup norms, Holder seminorms, shell norms.

The Holder seminorm estimator samples difference quotients over a
deterministic low-discrepancy set of grid-point pairs, stratified by
octave of separation from the grid spacing up to the cutoff length.
It is a lower bound on the true seminorm that is monotone in both the
pair budget (prefix property) and the cutoff (pairs are generated
independently of the cutoff and then distance-filtered), and it is
bit-for-bit reproducible: no random state is involved anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .spectral import (
    SPECTRAL,
    Grid3,
    SpectralField3,
    _wrap,
    to_physical,
    to_spectral,
    upsample,
)

# Kronecker sequence generators (fractional parts of sqrt primes) for the
# base points, golden ratio for the intra-octave radius spread.
_GEN = np.array([0.41421356237309515, 0.7320508075688772, 0.2360679774997896])
_PHI = 0.6180339887498949


@dataclass(frozen=True)
class HolderConfig:
    """Parameters of the Holder seminorm estimate.

    delta: Holder exponent, in (0, 1].
    cutoff_l: largest pair separation considered (the L in the quotient).
    pair_budget: pairs sampled per separation octave (>= 1000).
    upsample: spectral refinement factor for pointwise evaluation.
    """

    delta: float
    cutoff_l: float
    pair_budget: int = 10_000
    upsample: int = 2

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise UsageError(f"delta must lie in (0, 1], got {self.delta}")
        if not self.cutoff_l > 0.0:
            raise UsageError(f"cutoff_l must be positive, got {self.cutoff_l}")
        if self.pair_budget < 1000:
            raise UsageError(f"pair_budget must be >= 1000, got {self.pair_budget}")
        if self.upsample < 1:
            raise UsageError(f"upsample must be >= 1, got {self.upsample}")


def linf_from_values(phys: np.ndarray) -> float:
    """Grid max of |f| (vector magnitude for 4-d arrays) over given values."""
    if phys.ndim == 4:
        return float(np.sqrt((phys**2).sum(axis=0)).max())
    return float(np.abs(phys).max())


def linf_norm(field: SpectralField3, refine: int = 1) -> float:
    """Grid max of |f| (vector magnitude for vectors) after spectral refinement.

    A lower bound on the true sup norm, nondecreasing in ``refine``.
    """
    return linf_from_values(to_physical(upsample(field, refine)).data)


def _direction_set() -> np.ndarray:
    """Signed axes plus a Fibonacci sphere; fixed for all estimates."""
    axes = np.array(
        [
            [1.0, 0, 0],
            [-1.0, 0, 0],
            [0, 1.0, 0],
            [0, -1.0, 0],
            [0, 0, 1.0],
            [0, 0, -1.0],
        ]
    )
    count = 42
    i = np.arange(count, dtype=np.float64)
    ga = np.pi * (3.0 - np.sqrt(5.0))
    z = 1.0 - 2.0 * (i + 0.5) / count
    r = np.sqrt(1.0 - z**2)
    fib = np.stack([r * np.cos(ga * i), r * np.sin(ga * i), z], axis=1)
    return np.vstack([axes, fib])


_DIRS = _direction_set()


def holder_seminorm_from_values(
    phys: np.ndarray, box_length: float, cfg: HolderConfig
) -> float:
    """Seminorm estimate over already-refined physical values.

    ``phys`` must hold the field sampled on the cfg.upsample-refined grid;
    the caller owns that contract, which lets one refinement feed several
    exponents.
    """
    comps = phys if phys.ndim == 4 else phys[np.newaxis]
    m = comps.shape[-1]
    h = box_length / m
    budget = cfg.pair_budget
    p = np.arange(budget, dtype=np.float64)
    base = np.floor((p[:, None] * _GEN[None, :] % 1.0) * m).astype(np.int64) % m
    dirs = _DIRS[np.arange(budget) % len(_DIRS)]
    radius_u = (p * _PHI) % 1.0
    best = 0.0
    octave = 0
    while h * (2.0**octave) <= cfg.cutoff_l:
        r = h * 2.0 ** (octave + radius_u)
        off = np.rint(r[:, None] * dirs / h).astype(np.int64)
        keep = np.any(off != 0, axis=1)
        if not np.any(keep):
            octave += 1
            continue
        b = base[keep]
        o = off[keep]
        other = (b + o) % m
        mi = (o + m // 2) % m - m // 2  # minimal-image integer offset
        dist = h * np.sqrt((mi.astype(np.float64) ** 2).sum(axis=1))
        ok = (dist > 0.0) & (dist <= cfg.cutoff_l)
        if np.any(ok):
            b, other, dist = b[ok], other[ok], dist[ok]
            fa = comps[:, b[:, 0], b[:, 1], b[:, 2]]
            fb = comps[:, other[:, 0], other[:, 1], other[:, 2]]
            diff = np.sqrt(((fa - fb) ** 2).sum(axis=0))
            best = max(best, float(np.max(diff / dist**cfg.delta)))
        octave += 1
    return best


def holder_seminorm(field: SpectralField3, cfg: HolderConfig) -> float:
    """Estimated sup over sampled pairs of |f(x) - f(y)| / |x - y|^delta.

    Pairs live on the refined grid; distances are periodic minimal-image
    lengths of the integer offsets actually applied, so every quotient
    is exact for the pair it refers to.
    """
    phys = to_physical(upsample(field, cfg.upsample)).data
    return holder_seminorm_from_values(phys, field.grid.box_length, cfg)


def holder_seminorm_all_pairs(
    field: SpectralField3, delta: float, cutoff_l: float, refine: int = 1
) -> float:
    """Exhaustive quotient max over every grid-point pair; oracle for tests.

    Cost grows with the sixth power of the grid size; intended for small n.
    """
    if not 0.0 < delta <= 1.0:
        raise UsageError(f"delta must lie in (0, 1], got {delta}")
    phys = to_physical(upsample(field, refine)).data
    comps = phys if phys.ndim == 4 else phys[np.newaxis]
    c = comps.shape[0]
    m = comps.shape[-1]
    box = field.grid.box_length
    h = box / m
    flat = comps.reshape(c, -1)
    idx = np.indices((m, m, m)).reshape(3, -1).T  # (m^3, 3)
    npts = flat.shape[1]
    best = 0.0
    chunk = max(1, 2**22 // npts)
    for start in range(0, npts, chunk):
        stop = min(npts, start + chunk)
        d = idx[start:stop, None, :] - idx[None, :, :]
        d = (d + m // 2) % m - m // 2
        dist = h * np.sqrt((d.astype(np.float64) ** 2).sum(axis=2))
        diff = np.zeros_like(dist)
        for ci in range(c):
            diff += (flat[ci, start:stop, None] - flat[ci, None, :]) ** 2
        diff = np.sqrt(diff)
        ok = (dist > 0.0) & (dist <= cutoff_l)
        if np.any(ok):
            best = max(best, float(np.max(diff[ok] / dist[ok] ** delta)))
    return best


def length_scale_from_seminorm(
    seminorm: float, u0_l2: float, delta: float, cutoff_l: float
) -> float:
    """min(L, (seminorm / u0_l2)^(-2/(2 delta + 5))); L when the field is flat."""
    if not u0_l2 > 0.0:
        raise UsageError(f"u0_l2 must be positive, got {u0_l2}")
    if seminorm < 0.0:
        raise UsageError("seminorm cannot be negative")
    if seminorm == 0.0:
        return cutoff_l
    ratio = seminorm / u0_l2
    return float(min(cutoff_l, ratio ** (-2.0 / (2.0 * delta + 5.0))))


def length_scale(omega: SpectralField3, u0_l2: float, cfg: HolderConfig) -> float:
    """Regularity length scale of a vorticity field."""
    sem = holder_seminorm(omega, cfg)
    return length_scale_from_seminorm(sem, u0_l2, cfg.delta, cfg.cutoff_l)


# --------------------------------------------------------------------------
# Dyadic shell decomposition and the norms built on it.
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LPDecomposition:
    """Sharp dyadic shell split: residual (|k| < 1) plus octave bands."""

    grid: Grid3
    js: tuple
    shells: tuple
    residual: SpectralField3

    def reconstruct(self) -> SpectralField3:
        total = self.residual.data.copy()
        for piece in self.shells:
            total = total + piece.data
        return _wrap(self.grid, total, SPECTRAL)


def lp_decompose(field: SpectralField3) -> LPDecomposition:
    """Materialize the shell fields.  Shells are coefficient-disjoint."""
    g = field.grid
    fh = to_spectral(field).data
    sidx = g.shell_index
    occupied = sorted(int(j) for j in np.unique(sidx) if j >= 0)
    shells = []
    for j in occupied:
        shells.append(_wrap(g, fh * (sidx == j), SPECTRAL))
    residual = _wrap(g, fh * (sidx == -1), SPECTRAL)
    return LPDecomposition(g, tuple(occupied), tuple(shells), residual)


def shell_energies(field: SpectralField3):
    """Per-shell squared L2 norms.

    Returns (js, energies, residual_energy) with energies[i] the squared
    L2 norm of shell js[i]; the residual block holds |k| < 1 (the mean
    mode on the default box).
    """
    g = field.grid
    fh = to_spectral(field).data
    power = np.abs(fh) ** 2
    if fh.ndim == 4:
        power = power.sum(axis=0)
    sidx = g.shell_index.ravel()
    weights = power.ravel() * g.volume
    jmax = int(sidx.max())
    sums = np.bincount(sidx + 1, weights=weights, minlength=jmax + 2)
    residual = float(sums[0])
    js = np.arange(0, jmax + 1)
    return js, sums[1:], residual


def besov_norm(field: SpectralField3, s: float, homogeneous: bool = False) -> float:
    """Dyadic-shell norm (sum_j 2^(2js) ||f_j||^2)^(1/2), L2 term added
    for the inhomogeneous variant."""
    if s < 0:
        raise UsageError(f"besov_norm requires s >= 0, got s={s}")
    js, energies, residual = shell_energies(field)
    total = float(np.sum(4.0 ** (js * s) * energies))
    if homogeneous:
        return float(np.sqrt(total))
    l2_sq = float(np.sum(energies) + residual)
    return float(np.sqrt(l2_sq + total))


def sobolev_norm(field: SpectralField3, s: float) -> float:
    """(sum_k (1 + |k|^2)^s |f_hat(k)|^2 * vol)^(1/2)."""
    g = field.grid
    fh = to_spectral(field).data
    power = np.abs(fh) ** 2
    if fh.ndim == 4:
        power = power.sum(axis=0)
    weight = (1.0 + g.k_sq) ** s
    return float(np.sqrt(g.volume * np.sum(weight * power)))


def besov_sobolev_window(field: SpectralField3, s: float):
    """Per-field sharp bounds [lo, hi] on besov_inhom / sobolev.

    Derived mode by mode from the occupied coefficients: each mode
    contributes weight (1+|k|^2)^s to the Sobolev square and
    1 + 4^(js) (or 1 in the residual) to the shell-norm square.
    """
    g = field.grid
    fh = to_spectral(field).data
    power = np.abs(fh) ** 2
    if fh.ndim == 4:
        power = power.sum(axis=0)
    occ = power > 0
    if not np.any(occ):
        raise UsageError("cannot bound the norm ratio of the zero field")
    sidx = g.shell_index
    bweight = np.where(sidx >= 0, 1.0 + 4.0 ** (sidx * s), 1.0)
    hweight = (1.0 + g.k_sq) ** s
    ratio = hweight[occ] / bweight[occ]  # sobolev^2 / besov^2 per mode
    return float(1.0 / np.sqrt(ratio.max())), float(1.0 / np.sqrt(ratio.min()))

"""Velocity-gradient tensor: two construction routes and its symmetric split.

The tensor field Du stores entry (i, j) = d_i u_j, so contracting a
vector v against the first index gives the convective derivative
(v . grad) u.  Two routes build it:

* ``du_by_differentiation``: entrywise i*k_i*u_hat_j from a velocity.
* ``du_from_vorticity``: a Fourier-multiplier map applied directly to
  the vorticity, assembled from the coefficient tables below.

The antisymmetric part acts on vectors as half the vorticity wedge,
``apply(du_minus, v) = (1/2) w x v``, which is verified pointwise here
rather than encoded as a second multiplier table.
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
    curl,
    inverse_real,
    to_physical,
    to_spectral,
    upsample_coefficients,
    velocity_from_vorticity,
)

# --------------------------------------------------------------------------
# Multiplier coefficient tables.
#
# Each term (sign, a, b, l) in TABLE[i][j] stands for
#     sign * xi_a * xi_b * w_hat_l / (2 |xi|^2).
# The sum of the two tables, transposed and scaled by -2, equals the
# gradient [d_i u_j] of the velocity recovered from w.  That global
# factor and index swap are fixed constants of the construction; they
# are applied in one place (_GRADIENT_SCALE plus the [j][i] lookup in
# du_from_vorticity) so the tables themselves stay in the compact
# off-diagonal/diagonal split form that makes the angular structure of
# the symbols easy to read off.
# --------------------------------------------------------------------------

# Off-diagonal monomials xi_a xi_b (a != b).
_G_TABLE = (
    (((+1, 0, 1, 2), (-1, 0, 2, 1)), ((-1, 1, 2, 1),), ((+1, 1, 2, 2),)),
    (((+1, 0, 2, 0),), ((+1, 1, 2, 0), (-1, 0, 1, 2)), ((-1, 0, 2, 2),)),
    (((-1, 0, 1, 0),), ((+1, 0, 1, 1),), ((+1, 0, 2, 1), (-1, 1, 2, 0))),
)

# Pure-square monomials xi_a^2.
_H_TABLE = (
    ((), ((+1, 1, 1, 2),), ((-1, 2, 2, 1),)),
    (((-1, 0, 0, 2),), (), ((+1, 2, 2, 0),)),
    (((+1, 0, 0, 1),), ((-1, 1, 1, 0),), ()),
)

_GRADIENT_SCALE = -2.0


@dataclass(frozen=True)
class GradientTensorField:
    """3x3 tensor of scalar fields; entries shape (3, 3, n, n, n), spectral."""

    grid: Grid3
    data: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        if self.data.shape != (3, 3, n, n, n):
            raise UsageError(
                f"tensor data shape {self.data.shape} does not match grid n={n}"
            )

    def entry(self, i: int, j: int) -> SpectralField3:
        return _wrap(self.grid, self.data[i, j], SPECTRAL)

    def transpose(self) -> "GradientTensorField":
        return _make_tensor(self.grid, np.swapaxes(self.data, 0, 1))

    def trace_field(self) -> SpectralField3:
        tr = self.data[0, 0] + self.data[1, 1] + self.data[2, 2]
        return _wrap(self.grid, tr, SPECTRAL)

    def to_physical_entries(self, refine: int = 1) -> np.ndarray:
        """Real-space entries, shape (3, 3, m, m, m) with m = refine*n.

        All nine entries go through one batched real inverse transform.
        """
        n = self.grid.n
        flat = self.data.reshape(9, n, n, n)
        if refine > 1:
            flat = upsample_coefficients(flat, n, refine)
        m = n * refine
        return inverse_real(flat).reshape(3, 3, m, m, m)

    def frobenius_l2(self) -> float:
        """sqrt(sum_ij ||entry_ij||_L2^2)."""
        return float(
            np.sqrt(self.grid.volume * np.sum(np.abs(self.data) ** 2))
        )


def _make_tensor(grid: Grid3, data: np.ndarray) -> GradientTensorField:
    data = np.ascontiguousarray(data)
    data.flags.writeable = False
    return GradientTensorField(grid, data)


def du_by_differentiation(u: SpectralField3) -> GradientTensorField:
    """Entry (i, j) = i k_i u_hat_j, Nyquist zeroed."""
    if not u.is_vector:
        raise UsageError("du_by_differentiation requires a velocity vector field")
    g = u.grid
    uh = to_spectral(u).data
    mask = g.nyquist_mask
    n = g.n
    out = np.empty((3, 3, n, n, n), dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            out[i, j] = (1j * g.k[i]) * uh[j] * mask
    return _make_tensor(g, out)


def du_from_vorticity(w: SpectralField3) -> GradientTensorField:
    """Velocity gradient straight from the vorticity via the multiplier tables."""
    if not w.is_vector:
        raise UsageError("du_from_vorticity requires a vorticity vector field")
    g = w.grid
    wh = to_spectral(w).data
    mean = np.abs(wh[:, 0, 0, 0]).max()
    scale = np.abs(wh).max()
    if mean > 1e-13 * max(scale, 1e-300):
        raise UsageError("vorticity has a nonzero mean mode; multiplier undefined")
    k = g.k
    inv = 1.0 / (2.0 * g.k_sq_safe)
    mask = g.nyquist_mask
    n = g.n
    out = np.empty((3, 3, n, n, n), dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            acc = np.zeros((n, n, n), dtype=np.complex128)
            # [j][i] lookup plus _GRADIENT_SCALE: see table comment above.
            for table in (_G_TABLE, _H_TABLE):
                for sign, a, b, ell in table[j][i]:
                    acc += (sign * k[a] * k[b]) * wh[ell]
            acc *= _GRADIENT_SCALE * inv
            acc[0, 0, 0] = 0.0
            out[i, j] = acc * mask
    return _make_tensor(g, out)


def split_symmetric(d: GradientTensorField):
    """Exact split into (symmetric, antisymmetric) halves."""
    dt = np.swapaxes(d.data, 0, 1)
    plus = 0.5 * (d.data + dt)
    minus = 0.5 * (d.data - dt)
    return _make_tensor(d.grid, plus), _make_tensor(d.grid, minus)


def apply_tensor(points_entries: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Contract sampled tensor entries (m, 3, 3) against vectors (m, 3).

    The contraction runs over the first tensor index, matching the
    convective pairing sum_i entry(i, j) v_i.
    """
    return np.einsum("mij,mi->mj", points_entries, v)


def axial_vector_physical(minus: GradientTensorField, refine: int = 1) -> np.ndarray:
    """Axial vector a of the antisymmetric part: A v = a x v pointwise.

    For the antisymmetric half of a velocity gradient this equals w/2.
    Returns shape (3, m, m, m).
    """
    ent = minus.to_physical_entries(refine)
    # Under the first-index contraction of apply_tensor, a = (A23, A31, A12).
    return np.stack(
        [ent[1, 2] - ent[2, 1], ent[2, 0] - ent[0, 2], ent[0, 1] - ent[1, 0]]
    ) * 0.5


def verify_antisymmetric_identity(
    u: SpectralField3, samples: int = 10_000, seed: int = 0
) -> float:
    """Max residual of apply(Du-, v) = (1/2) w x v at sampled points.

    Scaled by sup|w| |v| rather than pointwise |w(x)| |v|: at exact zeros
    of the vorticity the pointwise quotient is roundoff over roundoff and
    carries no information about the identity.
    """
    if samples < 1:
        raise UsageError("samples must be positive")
    g = u.grid
    d = du_by_differentiation(u)
    _, minus = split_symmetric(d)
    ent = minus.to_physical_entries()
    w = to_physical(curl(u)).data
    rng = np.random.default_rng(seed)
    n = g.n
    flat = rng.integers(0, n, size=(samples, 3))
    v = rng.standard_normal((samples, 3))
    ix, iy, iz = flat[:, 0], flat[:, 1], flat[:, 2]
    tens = np.empty((samples, 3, 3))
    for i in range(3):
        for j in range(3):
            tens[:, i, j] = ent[i, j][ix, iy, iz]
    wv = w[:, ix, iy, iz].T  # (samples, 3)
    lhs = apply_tensor(tens, v)
    rhs = 0.5 * np.cross(wv, v)
    num = np.linalg.norm(lhs - rhs, axis=1)
    wmax = np.sqrt((w**2).sum(axis=0)).max()
    den = wmax * np.linalg.norm(v, axis=1) + 1e-30
    return float(np.max(num / den))


# --------------------------------------------------------------------------
# Angular symbols of the symmetric part and their spherical means.
# --------------------------------------------------------------------------

def symmetric_symbol(i: int, j: int, ell: int):
    """Monomial decomposition of the (i, j) symmetric-part symbol acting on w_ell.

    Returns a list of (coeff, kind, a, b) terms where kind "pair" means
    y_a*y_b (a < b) and kind "diff" means y_a^2 - y_b^2, evaluated on the
    unit sphere.  Every term integrates to zero over the sphere.
    """
    quad = np.zeros((3, 3))
    # Du+_{ij} = (scale/2) * ((G+H)_{ji} + (G+H)_{ij}); table terms carry 1/2.
    for src in ((j, i), (i, j)):
        for table in (_G_TABLE, _H_TABLE):
            for sign, a, b, l in table[src[0]][src[1]]:
                if l == ell:
                    quad[a, b] += 0.5 * sign * (_GRADIENT_SCALE / 2.0)
    terms = []
    for a in range(3):
        for b in range(a + 1, 3):
            c = quad[a, b] + quad[b, a]
            if c != 0.0:
                terms.append((c, "pair", a, b))
    diag = np.array([quad[0, 0], quad[1, 1], quad[2, 2]])
    if abs(diag.sum()) > 1e-12:
        raise UsageError(
            "diagonal monomials of a symmetric-part symbol do not cancel; "
            "coefficient table transcription is inconsistent"
        )
    # c0 y0^2 + c1 y1^2 + c2 y2^2 with zero sum -> difference monomials.
    if diag[0] != 0.0:
        terms.append((diag[0], "diff", 0, 2))
    if diag[1] != 0.0:
        terms.append((diag[1], "diff", 1, 2))
    return terms


def base_kernel_entry(i: int, j: int):
    """Entry (i, j) of the reference angular kernel 3 y (x) y - identity."""
    def sym(y):
        val = 3.0 * y[i] * y[j]
        if i == j:
            val = val - 1.0
        return val

    return sym


def sphere_quadrature(order: int):
    """Product Gauss-Legendre (polar) x trapezoid (azimuth) nodes on S^2.

    Returns (points, weights) with points of shape (m, 3) and weights
    summing to 4*pi; m = 2 * order^2 >= the requested node floor.
    """
    if order < 2:
        raise UsageError("quadrature order must be at least 2")
    mu, wmu = np.polynomial.legendre.leggauss(order)
    nphi = 2 * order
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    wphi = 2.0 * np.pi / nphi
    sin_t = np.sqrt(1.0 - mu**2)
    pts = np.empty((order * nphi, 3))
    wts = np.empty(order * nphi)
    idx = 0
    for a in range(order):
        pts[idx : idx + nphi, 0] = sin_t[a] * np.cos(phi)
        pts[idx : idx + nphi, 1] = sin_t[a] * np.sin(phi)
        pts[idx : idx + nphi, 2] = mu[a]
        wts[idx : idx + nphi] = wmu[a] * wphi
        idx += nphi
    return pts, wts


def _eval_terms(terms, pts: np.ndarray) -> np.ndarray:
    val = np.zeros(pts.shape[0])
    for c, kind, a, b in terms:
        if kind == "pair":
            val += c * pts[:, a] * pts[:, b]
        else:
            val += c * (pts[:, a] ** 2 - pts[:, b] ** 2)
    return val


def spherical_mean_sigma(component=None, quadrature_order: int = 24) -> dict:
    """Spherical mean of an angular symbol; |mean| should vanish.

    ``component`` is either None (worst entry of the base kernel), a pair
    (i, j) for the base kernel entry, or a triple (i, j, ell) for the
    assembled symmetric-part symbol acting on vorticity component ell.
    Returns a dict with the mean, node count, and a symbol label.
    """
    pts, wts = sphere_quadrature(quadrature_order)
    total = float(wts.sum())
    if component is None:
        worst = 0.0
        for i in range(3):
            for j in range(3):
                m = float(np.sum(base_kernel_entry(i, j)(pts.T) * wts) / total)
                worst = max(worst, abs(m))
        return {"mean": worst, "nodes": len(wts), "symbol": "base-kernel max entry"}
    if len(component) not in (2, 3) or any(c not in (0, 1, 2) for c in component):
        raise UsageError(f"unknown symbol component {component!r}")
    if len(component) == 2:
        i, j = component
        m = float(np.sum(base_kernel_entry(i, j)(pts.T) * wts) / total)
        return {"mean": m, "nodes": len(wts), "symbol": f"base[{i},{j}]"}
    i, j, ell = component
    terms = symmetric_symbol(i, j, ell)
    m = float(np.sum(_eval_terms(terms, pts) * wts) / total)
    return {"mean": m, "nodes": len(wts), "symbol": f"sym[{i},{j}] on w_{ell}"}


def transcription_table() -> str:
    """Readable dump of the multiplier tables and assembled angular symbols."""
    lines = ["multiplier tables: term = sign * xi_a xi_b w_l / (2|xi|^2)"]
    names = ("off-diagonal", "squares")
    for name, table in zip(names, (_G_TABLE, _H_TABLE)):
        lines.append(f"[{name}]")
        for i in range(3):
            for j in range(3):
                if not table[i][j]:
                    continue
                parts = " ".join(
                    f"{'+' if s > 0 else '-'}xi{a + 1}*xi{b + 1}*w{l + 1}"
                    for s, a, b, l in table[i][j]
                )
                lines.append(f"  entry({i + 1},{j + 1}): {parts}")
    lines.append(f"[gradient orientation] Du(i,j) = {_GRADIENT_SCALE:g} * table(j,i)")
    lines.append("[symmetric-part angular symbols] (y on the unit sphere)")
    for i in range(3):
        for j in range(3):
            for ell in range(3):
                terms = symmetric_symbol(i, j, ell)
                if not terms:
                    continue
                frag = []
                for c, kind, a, b in terms:
                    if kind == "pair":
                        frag.append(f"{c:+g}*y{a + 1}*y{b + 1}")
                    else:
                        frag.append(f"{c:+g}*(y{a + 1}^2-y{b + 1}^2)")
                lines.append(f"  sym({i + 1},{j + 1}) w{ell + 1}: {' '.join(frag)}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# Pointwise tensor norms (used by the trace diagnostics).
# --------------------------------------------------------------------------

def symmetric_eig_bounds(entries: np.ndarray):
    """Eigenvalue range of a field of symmetric 3x3 matrices.

    ``entries`` has shape (3, 3, ...); returns (lam_min, lam_max) arrays.
    Closed-form trigonometric solve, vectorized over the grid.
    """
    a00, a01, a02 = entries[0, 0], entries[0, 1], entries[0, 2]
    a11, a12, a22 = entries[1, 1], entries[1, 2], entries[2, 2]
    q = (a00 + a11 + a22) / 3.0
    p1 = a01**2 + a02**2 + a12**2
    b00, b11, b22 = a00 - q, a11 - q, a22 - q
    p2 = b00**2 + b11**2 + b22**2 + 2.0 * p1
    p = np.sqrt(np.maximum(p2 / 6.0, 0.0))
    safe = np.where(p > 0, p, 1.0)
    c00, c01, c02 = b00 / safe, a01 / safe, a02 / safe
    c11, c12, c22 = b11 / safe, a12 / safe, b22 / safe
    detb = (
        c00 * (c11 * c22 - c12**2)
        - c01 * (c01 * c22 - c12 * c02)
        + c02 * (c01 * c12 - c11 * c02)
    )
    r = np.clip(detb / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    lam_max = q + 2.0 * p * np.cos(phi)
    lam_min = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    return lam_min, lam_max


def operator_norm_symmetric(entries: np.ndarray) -> np.ndarray:
    lam_min, lam_max = symmetric_eig_bounds(entries)
    return np.maximum(np.abs(lam_min), np.abs(lam_max))


def operator_norm_general(entries: np.ndarray) -> np.ndarray:
    """Largest singular value pointwise: sqrt(lam_max(D^T D))."""
    prod = np.einsum("ki...,kj...->ij...", entries, entries)
    _, lam_max = symmetric_eig_bounds(prod)
    return np.sqrt(np.maximum(lam_max, 0.0))


def tensor_linf_from_entries(ent: np.ndarray, kind: str = "general") -> float:
    """Grid max of the pointwise operator norm over sampled real entries.

    ``kind`` selects the matrix treated at each point: "symmetric" and
    "general" solve the closed-form eigenproblem, "antisymmetric" uses the
    axial-vector magnitude, which for the antisymmetric PART of entries is
    identical to extracting that part first (the symmetric half cancels in
    the differences).
    """
    if kind == "symmetric":
        vals = operator_norm_symmetric(ent)
    elif kind == "antisymmetric":
        a = np.stack(
            [ent[1, 2] - ent[2, 1], ent[2, 0] - ent[0, 2], ent[0, 1] - ent[1, 0]]
        ) * 0.5
        vals = np.sqrt((a**2).sum(axis=0))
    elif kind == "general":
        vals = operator_norm_general(ent)
    else:
        raise UsageError(f"unknown tensor norm kind {kind!r}")
    return float(vals.max())


def tensor_linf(
    d: GradientTensorField, kind: str = "general", refine: int = 1
) -> float:
    """Grid max of the pointwise operator norm, optionally on a refined grid."""
    return tensor_linf_from_entries(d.to_physical_entries(refine), kind)


def gradient_tensor_of_vorticity_check(w: SpectralField3) -> float:
    """Max entrywise relative deviation between the two construction routes."""
    d_mult = du_from_vorticity(w)
    d_diff = du_by_differentiation(velocity_from_vorticity(w))
    worst = 0.0
    for i in range(3):
        for j in range(3):
            a = d_mult.data[i, j]
            b = d_diff.data[i, j]
            scale = np.max(np.abs(b))
            if scale == 0.0:
                scale = max(np.max(np.abs(a)), 1e-300)
            worst = max(worst, float(np.max(np.abs(a - b)) / scale))
    return worst

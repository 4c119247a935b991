"""Hand-derived reference fields shared across the test modules.

Everything here is written directly from the trigonometric closed forms,
independent of the package's own constructors, so the tests compare two
separate derivations.  The finite-difference stencils give a third,
transform-free route to derivatives.
"""

import numpy as np

TAU = 2.0 * np.pi


def mesh(n, box=TAU):
    x = np.arange(n) * (box / n)
    return np.meshgrid(x, x, x, indexing="ij")


def tg_velocity_values(n, amplitude=1.0):
    X, Y, Z = mesh(n)
    u = amplitude * np.sin(X) * np.cos(Y) * np.cos(Z)
    v = -amplitude * np.cos(X) * np.sin(Y) * np.cos(Z)
    return np.stack([u, v, np.zeros_like(X)])


def tg_vorticity_values(n, amplitude=1.0):
    # curl by hand: (d2 u3 - d3 u2, d3 u1 - d1 u3, d1 u2 - d2 u1)
    X, Y, Z = mesh(n)
    w1 = -amplitude * np.cos(X) * np.sin(Y) * np.sin(Z)
    w2 = -amplitude * np.sin(X) * np.cos(Y) * np.sin(Z)
    w3 = 2.0 * amplitude * np.sin(X) * np.sin(Y) * np.cos(Z)
    return np.stack([w1, w2, w3])


# sup over the box of |tg vorticity| at amplitude 1; the maximum sits at
# sin^2 x = sin^2 y = 1, cos^2 z = 1 where |w| = 2.
TG_VORTICITY_SUP = 2.0


def tg_gradient_values(n, amplitude=1.0):
    """All nine entries of [d_i u_j] for the cellular flow, by hand."""
    X, Y, Z = mesh(n)
    g = np.zeros((3, 3, n, n, n))
    g[0, 0] = amplitude * np.cos(X) * np.cos(Y) * np.cos(Z)
    g[1, 0] = -amplitude * np.sin(X) * np.sin(Y) * np.cos(Z)
    g[2, 0] = -amplitude * np.sin(X) * np.cos(Y) * np.sin(Z)
    g[0, 1] = amplitude * np.sin(X) * np.sin(Y) * np.cos(Z)
    g[1, 1] = -amplitude * np.cos(X) * np.cos(Y) * np.cos(Z)
    g[2, 1] = amplitude * np.cos(X) * np.sin(Y) * np.sin(Z)
    return g


def tg_pressure_values(n, amplitude=1.0):
    X, Y, Z = mesh(n)
    return (amplitude**2 / 16.0) * (np.cos(2 * X) + np.cos(2 * Y)) * (np.cos(2 * Z) + 2.0)


# Shear mode used for the quadratic-interaction pressure test:
#   u = (sin y, sin x, 0)  is divergence free,
#   (u . grad) u = (sin x cos y, sin y cos x, 0),
#   div of that = 2 cos x cos y, and  lap(cos x cos y) = -2 cos x cos y,
# so the recovered pressure must be exactly cos x cos y.
def shear_velocity_values(n):
    X, Y, Z = mesh(n)
    return np.stack([np.sin(Y), np.sin(X), np.zeros_like(X)])


def shear_pressure_values(n):
    X, Y, Z = mesh(n)
    return np.cos(X) * np.cos(Y)


def fd_partial(f, axis, h):
    """Periodic 8th-order central difference."""
    c = (4 / 5, -1 / 5, 4 / 105, -1 / 280)
    out = np.zeros_like(f)
    for m, cm in enumerate(c, start=1):
        out += cm * (np.roll(f, -m, axis=axis) - np.roll(f, m, axis=axis))
    return out / h


def fd_convective(u_vals, h):
    """(u . grad) u from gridded values, no transforms involved."""
    out = np.zeros_like(u_vals)
    for i in range(3):
        for j in range(3):
            out[i] += u_vals[j] * fd_partial(u_vals[i], axis=j, h=h)
    return out


def single_mode_scalar(n, kvec, coeff=0.5):
    """Coefficient array with c(k) = c(-k)* = coeff at one mode pair."""
    c = np.zeros((n, n, n), dtype=np.complex128)
    i, j, k = (int(v) % n for v in kvec)
    ni, nj, nk = ((-int(v)) % n for v in kvec)
    c[i, j, k] = coeff
    c[ni, nj, nk] = np.conj(coeff)
    return c

"""Green functions and Biot-Savart kernels of the upper half-space.

All functions broadcast over leading axes; points are arrays whose last
axis holds the ``d`` coordinates.  The half-space is ``x[..., -1] > 0`` and
``reflect`` maps a point to its mirror image across the wall.
"""

import numpy as np

from .errors import BoundaryEvaluationError, SingularPointError, UnsupportedDimensionError

# surface area of the unit sphere in R^d
_SPHERE_AREA = {2: 2.0 * np.pi, 3: 4.0 * np.pi}


def _check_dim(d, *points):
    if d not in _SPHERE_AREA:
        raise UnsupportedDimensionError(f"dimension must be 2 or 3, got {d}")
    for p in points:
        if p.shape[-1] != d:
            raise UnsupportedDimensionError(
                f"points have {p.shape[-1]} coordinates, expected {d}")


def reflect(x):
    """Mirror image of ``x`` across the hyperplane ``x_d = 0``."""
    xb = np.array(x, dtype=float, copy=True)
    xb[..., -1] *= -1.0
    return xb


def _sqdist(y, x):
    diff = y - x
    return diff, np.sum(diff * diff, axis=-1)


def green_free(d, y, x):
    """Free-space Green function: ``ln|y-x| / 2pi`` in 2-D, ``-1/(4 pi |y-x|)`` in 3-D."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_dim(d, y, x)
    _, r2 = _sqdist(y, x)
    if np.any(r2 == 0.0):
        raise SingularPointError("green_free evaluated at y == x")
    if d == 2:
        return 0.25 * np.log(r2) / np.pi
    return -1.0 / ((d - 2) * _SPHERE_AREA[d] * np.sqrt(r2) ** (d - 2))


def green_half(d, y, x):
    """Dirichlet Green function of the half-space, built by the image method."""
    x = np.asarray(x, dtype=float)
    return green_free(d, y, x) - green_free(d, y, reflect(x))


def biot_savart_kernel(d, y, x):
    """Gradient in ``y`` of :func:`green_half`."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_dim(d, y, x)
    diff, r2 = _sqdist(y, x)
    diffb, rb2 = _sqdist(y, reflect(x))
    if np.any(r2 == 0.0) or np.any(rb2 == 0.0):
        raise SingularPointError("Biot-Savart kernel evaluated at a pole")
    area = _SPHERE_AREA[d]
    free = diff / (area * (r2 ** (0.5 * d)))[..., None]
    image = diffb / (area * (rb2 ** (0.5 * d)))[..., None]
    return free - image


def biot_savart_kernel_mollified(y, x, eps_B):
    """2-D half-plane kernel multiplied by ``1 - exp(-|y-x|^2 / eps_B)``.

    The factor removes the pole at ``y = x`` (the value there is 0).  The
    image pole ``y = reflect(x)`` is not regularised and raises.
    """
    if eps_B <= 0:
        raise ValueError("eps_B must be positive")
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    _check_dim(2, y, x)
    diff, r2 = _sqdist(y, x)
    diffb, rb2 = _sqdist(y, reflect(x))
    if np.any(rb2 == 0.0):
        raise SingularPointError("mollified kernel evaluated at the image pole")
    moll = -np.expm1(-r2 / eps_B)
    with np.errstate(divide="ignore", invalid="ignore"):
        free_scale = np.where(r2 > 0.0, moll / r2, 1.0 / eps_B)
    scale_img = moll / rb2
    out = diff * free_scale[..., None] - diffb * scale_img[..., None]
    return out / (2.0 * np.pi)


def poisson_boundary_kernel(d, x, b):
    """Poisson kernel of the half-space for target ``x`` and wall point ``b``.

    ``b`` holds the ``d-1`` tangential coordinates of the wall point.  The
    2-D kernel is ``x2 / (pi |b - x|^2)``; in 3-D the kernel that integrates
    to one over the wall is ``x3 / (2 pi |b - x|^3)``.
    """
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_dim(d, x)
    if b.shape == () and d == 2:
        b = b[..., None]
    if b.shape[-1] != d - 1:
        raise UnsupportedDimensionError("wall point must have d-1 coordinates")
    h = x[..., -1]
    if np.any(h <= 0.0):
        raise BoundaryEvaluationError("Poisson kernel needs a target strictly inside")
    r2 = np.sum((b - x[..., :-1]) ** 2, axis=-1) + h * h
    if d == 2:
        return h / (np.pi * r2)
    return h / (2.0 * np.pi * r2 ** 1.5)


def poisson_panel_weights(x, edges):
    """Exact integrals of the 2-D Poisson kernel over wall panels.

    ``x`` is ``(..., 2)`` and ``edges`` the sorted ``(n+1,)`` panel edges; the
    result ``(..., n)`` sums to ``(arctan((b-x1)/x2) - arctan((a-x1)/x2)) / pi``.
    """
    x = np.asarray(x, dtype=float)
    h = x[..., 1:2]
    if np.any(h <= 0.0):
        raise BoundaryEvaluationError("Poisson kernel needs a target strictly inside")
    ang = np.arctan((np.asarray(edges, dtype=float) - x[..., 0:1]) / h)
    return np.diff(ang, axis=-1) / np.pi


def wedge2(a, w):
    """Planar wedge of a vector field with a scalar vorticity: ``(a2 w, -a1 w)``.

    With this orientation the free part of the half-plane kernel reproduces
    the classical 2-D Biot-Savart velocity (counter-clockwise rotation for
    positive vorticity).
    """
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    return np.stack([a[..., 1] * w, -a[..., 0] * w], axis=-1)

"""C^2 cut-off profile for the boundary layer and the thin-layer error terms."""

import numpy as np

_LO = 1.0 / 3.0
_HI = 2.0 / 3.0


def _as_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("cut-off argument must be non-negative")
    return r


def _branch(r, cubic, inner):
    mid = (r >= _LO) & (r <= _HI)
    out = np.where(mid, cubic(r - 0.5), 0.0)
    if inner:
        out = np.where(r < _LO, 1.0, out)
    return out if out.ndim else float(out)


def psi(r):
    """1 on [0, 1/3), the gluing cubic on [1/3, 2/3], 0 beyond."""
    r = _as_radius(r)
    return _branch(r, lambda z: 54.0 * z ** 3 - 4.5 * z + 0.5, inner=True)


def psi_prime(r):
    r = _as_radius(r)
    return _branch(r, lambda z: 162.0 * z ** 2 - 4.5, inner=False)


def psi_double_prime(r):
    r = _as_radius(r)
    return _branch(r, lambda z: 324.0 * z, inner=False)


_KINDS = ("alpha", "chi", "vartheta")


def error_term(kind, x, boundary_value, coeff, eps):
    """Simplified thin-layer correction ``coeff * eps^-2 * psi''(x_d/eps) * boundary_value``.

    ``kind`` selects which equation the term belongs to (``alpha`` for the
    temperature gradient, ``chi`` for vorticity, ``vartheta`` for the
    expansion rate); the formula is the same and ``coeff`` carries the
    matching diffusivity (``kappa/rho0``, ``mu/rho`` or ``(mu+lambda)/rho``).
    ``x`` is ``(..., d)``; a vector ``boundary_value`` has a trailing axis.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown error term {kind!r}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = np.asarray(x, dtype=float)
    height = np.maximum(x[..., -1], 0.0) / eps
    amp = np.asarray(coeff, dtype=float) * psi_double_prime(height) / eps ** 2
    bv = np.asarray(boundary_value, dtype=float)
    if bv.ndim > np.ndim(amp):
        amp = np.asarray(amp)[..., None]
    return amp * bv

"""Grid fields: velocity and temperature from particle ensembles, derived
fields by finite differences, wall traces, and density transport.

The grid covers ``[-L, L] x [0, L]`` with mesh ``s`` and carries extra rows
at ``x2 = k s_b`` (``k = 1 .. s/s_b - 1``) inside the first coarse cell.
Arrays are indexed ``[row (x2), column (x1), ...]``.
"""

from dataclasses import dataclass, field

import numpy as np

from .cutoff import error_term, psi
from .errors import CFLError, GridError, NonFiniteError, PositivityError, SingularMultiplierError
from .kernels import biot_savart_kernel_mollified, poisson_panel_weights

# targets per kernel block; fixed so reductions never depend on scheduling
BLOCK = 128


@dataclass
class FieldGrid:
    x1: np.ndarray
    x2: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    rho: np.ndarray
    omega: np.ndarray = None
    phi: np.ndarray = None
    Theta: np.ndarray = None
    S: np.ndarray = None
    t: float = 0.0

    @property
    def shape(self):
        return (len(self.x2), len(self.x1))

    def interior_points(self):
        """Nodes with ``x2 > 0`` as an ``(n, 2)`` array, row-major."""
        g1, g2 = np.meshgrid(self.x1, self.x2[1:])
        return np.stack([g1.ravel(), g2.ravel()], axis=-1)

    def points(self):
        g1, g2 = np.meshgrid(self.x1, self.x2)
        return np.stack([g1.ravel(), g2.ravel()], axis=-1)


@dataclass
class BoundaryData:
    x1: np.ndarray
    omega_b: np.ndarray
    phi_b: np.ndarray
    Theta_b: np.ndarray  # (n1, 2)
    theta_b: np.ndarray
    t: float = 0.0

    def at(self, x1):
        """Traces linearly interpolated at ``x1`` (held constant past the ends)."""
        x1 = np.asarray(x1, dtype=float)
        f = lambda v: np.interp(x1, self.x1, v)
        Tb = np.stack([f(self.Theta_b[:, 0]), f(self.Theta_b[:, 1])], axis=-1)
        return f(self.omega_b), f(self.phi_b), Tb


def grid_axes(cfg):
    n, m = cfg.n_half, cfg.n_refine
    x1 = cfg.s * np.arange(-n, n + 1)
    x2 = np.concatenate([cfg.s * np.arange(m) / m, cfg.s * np.arange(1, n + 1)])
    return x1, x2


def make_grid(cfg, t=0.0):
    x1, x2 = grid_axes(cfg)
    if len(x1) < 3 or len(x2) < 3:
        raise GridError("grid needs at least 3 nodes per axis")
    shape = (len(x2), len(x1))
    return FieldGrid(x1=x1, x2=x2, u=np.zeros(shape + (2,)), theta=np.zeros(shape),
                     rho=np.full(shape, float(cfg.rho0)), t=t)


# --- heating program -------------------------------------------------------

def _profile(x1, cfg):
    return np.exp(-0.5 * np.asarray(x1, dtype=float) ** 2 / cfg.L ** 2)


def _wall_amplitude(t, cfg):
    return cfg.heat_rate * min(t, cfg.heat_hold_time)


def boundary_temperature(x1, t, cfg):
    """Wall temperature: a Gaussian in ``x1`` ramped linearly until the hold time."""
    if t < 0:
        raise ValueError("time must be non-negative")
    if cfg.heating == "none":
        return np.zeros(np.shape(x1))
    if cfg.heating == "constant":
        return np.full(np.shape(x1), float(cfg.theta_b_const))
    return _wall_amplitude(t, cfg) * _profile(x1, cfg)


def boundary_temperature_gradient_1(x1, t, cfg):
    """Tangential derivative of :func:`boundary_temperature`."""
    if t < 0:
        raise ValueError("time must be non-negative")
    if cfg.heating != "ramp":
        return np.zeros(np.shape(x1))
    x1 = np.asarray(x1, dtype=float)
    return -_wall_amplitude(t, cfg) * x1 / cfg.L ** 2 * _profile(x1, cfg)


def heating_source(x, t, cfg):
    """Volume heat source ``g`` and its gradient at points ``x`` of shape ``(..., 2)``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    x = np.asarray(x, dtype=float)
    if cfg.source == "none":
        return np.zeros(x.shape[:-1]), np.zeros(x.shape)
    amp = (cfg.theta0 + cfg.source_rate * t) * np.exp(-0.5 * np.sum(x * x, axis=-1) / cfg.L ** 2)
    return amp, -(amp / cfg.L ** 2)[..., None] * x


def buoyancy_curl(Theta1_at, dthb_dx1_at, alpha):
    """Curl of the buoyancy force ``alpha (Theta^1 - d theta_b / d x1)``."""
    return alpha * (np.asarray(Theta1_at) - np.asarray(dthb_dx1_at))


# --- finite differences ----------------------------------------------------

def derive_grid_fields(grid):
    """Fill vorticity, expansion rate, temperature gradient and velocity Jacobian.

    Second-order central differences inside and one-sided three-point
    stencils at the edges (``numpy.gradient`` with ``edge_order=2``).
    """
    if len(grid.x1) < 3 or len(grid.x2) < 3:
        raise GridError("grid needs at least 3 nodes per axis")
    S = np.empty(grid.shape + (2, 2))
    for i in range(2):
        d2, d1 = np.gradient(grid.u[..., i], grid.x2, grid.x1, edge_order=2)
        S[..., i, 0] = d1
        S[..., i, 1] = d2
    t2, t1 = np.gradient(grid.theta, grid.x2, grid.x1, edge_order=2)
    grid.S = S
    grid.omega = S[..., 1, 0] - S[..., 0, 1]
    grid.phi = S[..., 0, 0] + S[..., 1, 1]
    grid.Theta = np.stack([t1, t2], axis=-1)
    return grid


def _wall_derivative(f0, f1, f2, h1, h2):
    """Three-point one-sided derivative at the wall from rows at 0, h1, h2."""
    w1 = h2 / (h1 * (h2 - h1))
    w2 = -h1 / (h2 * (h2 - h1))
    return -(w1 + w2) * f0 + w1 * f1 + w2 * f2


def estimate_boundary_values(grid, cfg, t=None):
    """Wall traces of vorticity, expansion rate and temperature gradient.

    With no-slip the tangential derivatives of ``u`` vanish on the wall, so
    ``omega_b = -d2 u1`` and ``phi_b = d2 u2``; ``Theta_b^1`` is the exact
    derivative of the wall temperature.
    """
    t = grid.t if t is None else t
    h1, h2 = grid.x2[1], grid.x2[2]
    d = lambda f: _wall_derivative(f[0], f[1], f[2], h1, h2)
    u1 = grid.u[..., 0]
    u2 = grid.u[..., 1]
    Tb = np.empty((len(grid.x1), 2))
    Tb[:, 0] = boundary_temperature_gradient_1(grid.x1, t, cfg)
    Tb[:, 1] = 0.0 if cfg.wall_gradient == "zero" else d(grid.theta)
    return BoundaryData(x1=grid.x1.copy(), omega_b=-d(u1), phi_b=d(u2), Theta_b=Tb,
                        theta_b=boundary_temperature(grid.x1, t, cfg), t=t)


def update_density(grid, dt, boundary, cfg=None):
    """Advance ``d rho / dt + u . grad rho = -phi rho`` one explicit upwind step."""
    u, rho, phi = grid.u, grid.rho, grid.phi
    hmin = min(np.min(np.diff(grid.x1)), np.min(np.diff(grid.x2)))
    umax = float(np.max(np.abs(u)))
    if dt * umax / hmin > 1.0:
        raise CFLError(f"advection CFL violated: dt*max|u|/h = {dt * umax / hmin:.3g}")
    if dt * float(np.max(np.abs(phi))) >= 1.0:
        raise CFLError("expansion-rate step too large: dt*max|phi| >= 1")
    new = rho.copy()
    r = rho[1:-1, 1:-1]
    a1 = u[1:-1, 1:-1, 0]
    a2 = u[1:-1, 1:-1, 1]
    dx1 = np.diff(grid.x1)
    dx2 = np.diff(grid.x2)
    back1 = (r - rho[1:-1, :-2]) / dx1[None, :-1]
    fwd1 = (rho[1:-1, 2:] - r) / dx1[None, 1:]
    back2 = (r - rho[:-2, 1:-1]) / dx2[:-1, None]
    fwd2 = (rho[2:, 1:-1] - r) / dx2[1:, None]
    grad1 = np.where(a1 > 0, back1, fwd1)
    grad2 = np.where(a2 > 0, back2, fwd2)
    new[1:-1, 1:-1] = r - dt * (a1 * grad1 + a2 * grad2 + phi[1:-1, 1:-1] * r)
    new[0, :] = rho[0, :] * (1.0 - dt * boundary.phi_b)
    new[1:, 0] = new[1:, 1]
    new[1:, -1] = new[1:, -2]
    new[-1, :] = new[-2, :]
    if np.any(new <= 0):
        raise PositivityError("density became non-positive")
    return new


# --- interpolation ---------------------------------------------------------

# channel name -> parity under x2 -> -x2 for the reflected velocity
_CHANNELS = (
    ("u1", 1.0), ("u2", -1.0), ("theta", 1.0), ("rho", 1.0),
    ("omega", -1.0), ("phi", 1.0), ("Theta1", 1.0), ("Theta2", -1.0),
    ("S11", 1.0), ("S12", -1.0), ("S21", -1.0), ("S22", 1.0),
)


class GridInterpolator:
    """Bilinear interpolation of all grid fields with reflection below the wall.

    Points outside ``[-L, L]`` or above ``L`` are clamped to the edge and
    counted in ``clamped``.
    """

    def __init__(self, grid):
        self.x1 = grid.x1
        self.x2 = grid.x2
        chans = [grid.u[..., 0], grid.u[..., 1], grid.theta, grid.rho,
                 grid.omega, grid.phi, grid.Theta[..., 0], grid.Theta[..., 1],
                 grid.S[..., 0, 0], grid.S[..., 0, 1], grid.S[..., 1, 0], grid.S[..., 1, 1]]
        self.data = np.stack(chans, axis=-1)
        self.parity = np.array([p for _, p in _CHANNELS])
        self.names = [n for n, _ in _CHANNELS]
        self.clamped = 0

    def __call__(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        below = pts[:, 1] < 0
        q1 = pts[:, 0]
        q2 = np.abs(pts[:, 1])
        out = (q1 < self.x1[0]) | (q1 > self.x1[-1]) | (q2 > self.x2[-1])
        self.clamped += int(np.count_nonzero(out))
        q1 = np.clip(q1, self.x1[0], self.x1[-1])
        q2 = np.clip(q2, self.x2[0], self.x2[-1])
        i = np.clip(np.searchsorted(self.x1, q1, side="right") - 1, 0, len(self.x1) - 2)
        j = np.clip(np.searchsorted(self.x2, q2, side="right") - 1, 0, len(self.x2) - 2)
        a = ((q1 - self.x1[i]) / (self.x1[i + 1] - self.x1[i]))[:, None]
        b = ((q2 - self.x2[j]) / (self.x2[j + 1] - self.x2[j]))[:, None]
        d = self.data
        vals = ((1 - a) * (1 - b) * d[j, i] + a * (1 - b) * d[j, i + 1]
                + (1 - a) * b * d[j + 1, i] + a * b * d[j + 1, i + 1])
        vals = np.where(below[:, None], vals * self.parity, vals)
        return {n: vals[:, k] for k, n in enumerate(self.names)}


def interpolate(grid, x):
    """Field values at points ``x`` (``(n, 2)`` or a single point)."""
    vals = GridInterpolator(grid)(x)
    if np.ndim(x) == 1:
        return {k: float(v[0]) for k, v in vals.items()}
    return vals


# --- representation formulas ----------------------------------------------

def _map_blocks(fn, n, pool):
    spans = [(a, min(a + BLOCK, n)) for a in range(0, n, BLOCK)]
    if pool is None:
        return [fn(a, b) for a, b in spans]
    return list(pool.map(lambda ab: fn(*ab), spans))


def kernel_velocity(targets, src, vort, div, eps_B, pool=None):
    """``sum_j Lambda(y_j, x) ^ vort_j - Lambda(y_j, x) div_j`` at each target."""
    targets = np.asarray(targets, dtype=float)
    if len(src) == 0:
        return np.zeros((len(targets), 2))

    def block(a, b):
        K = biot_savart_kernel_mollified(src[None, :, :], targets[a:b, None, :], eps_B)
        c1 = K[..., 1] * vort - K[..., 0] * div
        c2 = -K[..., 0] * vort - K[..., 1] * div
        return np.stack([c1.sum(axis=1), c2.sum(axis=1)], axis=-1)

    return np.concatenate(_map_blocks(block, len(targets), pool), axis=0)


def kernel_flux(targets, src, vec, eps_B, pool=None):
    """``sum_j Lambda(y_j, x) . vec_j`` at each target."""
    targets = np.asarray(targets, dtype=float)
    if len(src) == 0:
        return np.zeros(len(targets))

    def block(a, b):
        K = biot_savart_kernel_mollified(src[None, :, :], targets[a:b, None, :], eps_B)
        return (K[..., 0] * vec[:, 0] + K[..., 1] * vec[:, 1]).sum(axis=1)

    return np.concatenate(_map_blocks(block, len(targets), pool), axis=0)


def strip_quadrature(boundary, cfg):
    """Sources and weights for the cut-off layer ``[−L, L] x [0, eps]``.

    Midpoint rule with ``strip_points`` heights and the trapezoid rule over
    the wall nodes.  Returns points ``(K, 2)``, weights ``(K,)`` and the
    index of the wall node each point belongs to.
    """
    P = int(cfg.strip_points)
    eps = cfg.eps
    heights = (np.arange(P) + 0.5) * eps / P
    w2 = psi(heights / eps) * eps / P
    x1 = boundary.x1
    w1 = np.full(len(x1), cfg.s)
    w1[[0, -1]] *= 0.5
    keep = w2 > 0
    heights, w2 = heights[keep], w2[keep]
    node = np.repeat(np.arange(len(x1)), len(heights))
    pts = np.stack([x1[node], np.tile(heights, len(x1))], axis=-1)
    weights = w1[node] * np.tile(w2, len(x1))
    return pts, weights, node


def _check_finite(term, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError(f"non-finite weights in term {term!r}", term=term)


def velocity_sources(ensembles, boundary, cfg):
    """Source points with their vorticity and expansion weights, in a fixed order."""
    pts, w, node = strip_quadrature(boundary, cfg)
    groups = [(pts, boundary.omega_b[node] * w, boundary.phi_b[node] * w, "strip")]
    X = ensembles["X"]
    inside = X.pos[:, 1] > 0
    vort = np.where(X.alive, X.weight, 0.0) + X.force
    _check_finite("X", vort)
    groups.append((X.pos[inside], vort[inside], np.zeros(np.count_nonzero(inside)), "X"))
    Z = ensembles["Z"]
    inside = Z.pos[:, 1] > 0
    expo = np.exp(Z.phi_int)
    div = expo * (np.where(Z.alive, Z.weight, 0.0) + Z.force)
    _check_finite("Z", div)
    groups.append((Z.pos[inside], np.zeros(np.count_nonzero(inside)), div[inside], "Z"))
    for g in groups[:1]:
        _check_finite(g[3], g[1], g[2])
    src = np.concatenate([g[0] for g in groups], axis=0)
    vort = np.concatenate([g[1] for g in groups])
    div = np.concatenate([g[2] for g in groups])
    return src, vort, div


def eval_velocity(x, t, ensembles, boundary, cfg, pool=None):
    """Velocity at interior targets ``x`` ``(n, 2)`` from the X and Z ensembles.

    Sum of the cut-off layer integral of the wall traces, the killed initial
    vorticity, the vorticity source sum, and (with a minus sign) the
    expansion-rate initial and source terms; all kernels are mollified.
    """
    src, vort, div = velocity_sources(ensembles, boundary, cfg)
    return kernel_velocity(x, src, vort, div, cfg.eps_B, pool)


def poisson_term(x, t, cfg):
    """Truncated Poisson integral of the wall temperature at targets ``x``.

    Panels of width at most ``s`` over ``[-truncation, truncation]``; the
    kernel is integrated exactly on each panel and the wall temperature is
    taken at the panel midpoint.
    """
    B = cfg.truncation
    n = int(np.ceil(2 * B / cfg.s - 1e-9))
    edges = np.linspace(-B, B, n + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    thb = boundary_temperature(mids, t, cfg)
    x = np.asarray(x, dtype=float)
    if not np.any(thb):
        return np.zeros(len(x))
    out = np.empty(len(x))
    for a in range(0, len(x), BLOCK):
        out[a:a + BLOCK] = poisson_panel_weights(x[a:a + BLOCK], edges) @ thb
    return out


def temperature_sources(Y, boundary, cfg):
    pts, w, node = strip_quadrature(boundary, cfg)
    strip_vec = boundary.Theta_b[node] * w[:, None]
    inside = Y.pos[:, 1] > 0
    det = np.linalg.det(Y.W)
    if np.any(np.abs(det) < 1e-12):
        raise SingularMultiplierError("multiplier matrix is singular")
    carried = np.where(Y.alive[:, None], Y.weight, 0.0) + Y.force
    vec = np.linalg.solve(Y.W, carried[..., None])[..., 0]
    if cfg.weight_convention == "as_printed":
        vec = vec * np.exp(Y.phi_int)[:, None]
    _check_finite("Y", vec)
    _check_finite("strip", strip_vec)
    src = np.concatenate([pts, Y.pos[inside]], axis=0)
    return src, np.concatenate([strip_vec, vec[inside]], axis=0)


def eval_temperature(x, t, Y, boundary, cfg, pool=None):
    """Temperature at interior targets ``x`` from the Y ensemble.

    Poisson integral of the wall temperature minus the kernel sums of the
    cut-off layer and of the transported temperature-gradient weights.
    """
    src, vec = temperature_sources(Y, boundary, cfg)
    return poisson_term(x, t, cfg) - kernel_flux(x, src, vec, cfg.eps_B, pool)


def represent_fields(template, ensembles, boundary, t, cfg, pool=None):
    """Evaluate ``u`` and ``theta`` on every node of ``template``'s geometry."""
    grid = FieldGrid(x1=template.x1, x2=template.x2, u=np.zeros_like(template.u),
                     theta=np.zeros_like(template.theta), rho=template.rho, t=t)
    pts = grid.interior_points()
    n2, n1 = grid.shape
    if not cfg.freeze_velocity:
        grid.u[1:] = eval_velocity(pts, t, ensembles, boundary, cfg, pool).reshape(n2 - 1, n1, 2)
    grid.theta[0] = boundary_temperature(grid.x1, t, cfg)
    grid.theta[1:] = eval_temperature(pts, t, ensembles["Y"], boundary, cfg, pool).reshape(n2 - 1, n1)
    return derive_grid_fields(grid)


def particle_integrands(kind, ens, vals, boundary, t, cfg):
    """Source integrand of each particle at its current position.

    X: buoyancy curl plus the vorticity layer term; Y: heat-source gradient
    plus the temperature-gradient layer term; Z: expansion-rate layer term.
    """
    pos = ens.pos
    om_b, ph_b, Th_b = boundary.at(pos[:, 0])
    rho = np.full(len(pos), cfg.rho0) if cfg.freeze_rho else vals["rho"]
    if kind == "X":
        curl = buoyancy_curl(vals["Theta1"], boundary_temperature_gradient_1(pos[:, 0], t, cfg),
                             cfg.alpha)
        return curl + error_term("chi", pos, om_b, cfg.mu / rho, cfg.eps)
    if kind == "Y":
        _, grad_g = heating_source(pos, t, cfg)
        return grad_g + error_term("alpha", pos, Th_b, cfg.kappa / cfg.rho0, cfg.eps)
    return error_term("vartheta", pos, ph_b, (cfg.mu + cfg.lam) / rho, cfg.eps)

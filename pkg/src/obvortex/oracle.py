"""Reference solutions: an explicit finite-difference parabolic solver, a
forward-path Feynman-Kac estimator for the same problems, and a vortex
patch with closed-form half-plane velocity.

Problems have the form

    d/dt Psi = div(a grad Psi) + b . grad Psi + (c + q) Psi + f,

with ``Psi`` a ``k``-vector, ``a`` and ``c`` scalars, ``q`` a ``k x k``
matrix and zero Dirichlet data on the wall ``x2 = 0`` (half-plane) and on
the edges of the computational box.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import erf

from . import rng
from .errors import CFLError, NonFiniteError

# stream ids for oracle random numbers, disjoint from the particle kinds
_STREAM_START = 10
_STREAM_PATH = 11
_STREAM_KILL = 12


@dataclass
class OracleProblem:
    """Coefficients are callables of ``(x, t)`` with ``x`` of shape ``(n, 2)``.

    ``a``, ``c``, ``div_b`` return ``(n,)``; ``grad_a`` and ``b`` return
    ``(n, 2)``; ``q`` returns ``(n, k, k)``; ``f`` returns ``(n, k)``;
    ``psi0(x)`` returns ``(n, k)``.
    """
    k: int
    a: object
    grad_a: object
    b: object
    div_b: object
    c: object
    q: object
    f: object
    psi0: object
    half_plane: bool = True
    box: tuple = (-4.0, 4.0, 0.0, 4.0)
    a_max: float = 1.0
    label: str = ""


def _zeros(k):
    return {
        "b": lambda x, t: np.zeros(x.shape),
        "div_b": lambda x, t: np.zeros(len(x)),
        "c": lambda x, t: np.zeros(len(x)),
        "q": lambda x, t: np.zeros((len(x), k, k)),
        "f": lambda x, t: np.zeros((len(x), k)),
        "grad_a": lambda x, t: np.zeros(x.shape),
    }


def heat_problem(a0, psi0, k=1, half_plane=False, box=(-4.0, 4.0, -4.0, 4.0), **overrides):
    """Constant-diffusion problem; other coefficients default to zero."""
    parts = _zeros(k)
    parts.update(overrides)
    return OracleProblem(k=k, a=lambda x, t: np.full(len(x), float(a0)), psi0=psi0,
                         half_plane=half_plane, box=box, a_max=float(a0), **parts)


# --- finite differences ----------------------------------------------------

@dataclass
class FDSolution:
    x1: np.ndarray
    x2: np.ndarray
    t: float
    psi: np.ndarray  # (n2, n1, k)
    extra: dict = field(default_factory=dict)

    def points(self):
        g1, g2 = np.meshgrid(self.x1, self.x2)
        return np.stack([g1, g2], axis=-1)

    def at(self, x):
        """Bilinear value at a single point."""
        p1, p2 = float(x[0]), float(x[1])
        i = int(np.clip(np.searchsorted(self.x1, p1) - 1, 0, len(self.x1) - 2))
        j = int(np.clip(np.searchsorted(self.x2, p2) - 1, 0, len(self.x2) - 2))
        a = (p1 - self.x1[i]) / (self.x1[i + 1] - self.x1[i])
        b = (p2 - self.x2[j]) / (self.x2[j + 1] - self.x2[j])
        P = self.psi
        return ((1 - a) * (1 - b) * P[j, i] + a * (1 - b) * P[j, i + 1]
                + (1 - a) * b * P[j + 1, i] + a * b * P[j + 1, i + 1])

    def smoothed(self, xi, bandwidth):
        """Integral of ``Psi`` against a normalized Gaussian of width ``bandwidth`` at ``xi``."""
        pts = self.points()
        r2 = np.sum((pts - np.asarray(xi)) ** 2, axis=-1)
        K = np.exp(-0.5 * r2 / bandwidth ** 2) / (2 * np.pi * bandwidth ** 2)
        cell = (self.x1[1] - self.x1[0]) * (self.x2[1] - self.x2[0])
        return np.einsum("ji,jik->k", K, self.psi) * cell


def fd_solve(problem, h, dt, T):
    """Explicit conservative central differences up to time ``T``.

    Diffusion fluxes use ``a`` at cell faces; the drift uses central
    differences.  ``dt`` is reduced so the steps land on ``T`` exactly.
    """
    a_max = problem.a_max
    if dt > h * h / (4.0 * a_max) * (1 + 1e-12):
        raise CFLError(f"dt = {dt:g} exceeds h^2/(4 max a) = {h * h / (4 * a_max):g}")
    x1a, x1b, x2a, x2b = problem.box
    if problem.half_plane:
        x2a = 0.0
    n1 = int(round((x1b - x1a) / h))
    n2 = int(round((x2b - x2a) / h))
    x1 = x1a + h * np.arange(n1 + 1)
    x2 = x2a + h * np.arange(n2 + 1)
    g1, g2 = np.meshgrid(x1, x2)
    pts = np.stack([g1.ravel(), g2.ravel()], axis=-1)
    shape = (n2 + 1, n1 + 1)
    k = problem.k
    psi = np.asarray(problem.psi0(pts), dtype=float).reshape(shape + (k,))
    psi[0] = psi[-1] = psi[:, 0] = psi[:, -1] = 0.0
    nsteps = max(1, int(np.ceil(T / dt - 1e-9))) if T > 0 else 0
    dt = T / nsteps if nsteps else 0.0
    # face points for the diffusion flux
    f1 = np.stack([(0.5 * (g1[:, 1:] + g1[:, :-1])).ravel(), g2[:, 1:].ravel()], axis=-1)
    f2 = np.stack([g1[1:].ravel(), (0.5 * (g2[1:] + g2[:-1])).ravel()], axis=-1)
    for n in range(nsteps):
        t = n * dt
        a1 = problem.a(f1, t).reshape(n2 + 1, n1)[..., None]
        a2 = problem.a(f2, t).reshape(n2, n1 + 1)[..., None]
        flux1 = a1 * np.diff(psi, axis=1) / h
        flux2 = a2 * np.diff(psi, axis=0) / h
        rhs = np.zeros_like(psi)
        rhs[1:-1, 1:-1] += (flux1[1:-1, 1:] - flux1[1:-1, :-1]) / h
        rhs[1:-1, 1:-1] += (flux2[1:, 1:-1] - flux2[:-1, 1:-1]) / h
        b = problem.b(pts, t).reshape(shape + (2,))
        d1 = (psi[1:-1, 2:] - psi[1:-1, :-2]) / (2 * h)
        d2 = (psi[2:, 1:-1] - psi[:-2, 1:-1]) / (2 * h)
        rhs[1:-1, 1:-1] += b[1:-1, 1:-1, 0, None] * d1 + b[1:-1, 1:-1, 1, None] * d2
        c = problem.c(pts, t).reshape(shape)[..., None]
        q = problem.q(pts, t).reshape(shape + (k, k))
        rhs += c * psi + np.einsum("jiab,jib->jia", q, psi)
        rhs += problem.f(pts, t).reshape(shape + (k,))
        psi = psi + dt * rhs
        psi[0] = psi[-1] = psi[:, 0] = psi[:, -1] = 0.0
    if not np.all(np.isfinite(psi)):
        raise NonFiniteError("finite-difference solution blew up", term="fd")
    return FDSolution(x1=x1, x2=x2, t=T, psi=psi)


# --- Monte Carlo -----------------------------------------------------------

@dataclass
class Estimate:
    value: np.ndarray
    se: np.ndarray
    n_paths: int

    def __iter__(self):
        return iter((self.value, self.se))


def _multiplier_step(V, G, dt):
    """``V <- V expm(-G dt)`` for a batch of ``k x k`` generators."""
    if G.shape[-1] == 1:
        return V * np.exp(-G * dt)
    return V @ scipy.linalg.expm(-G * dt)


def feynman_kac_estimate(problem, xi, T, n_paths, seed=0, dt=0.01, bandwidth=0.2):
    """Forward-path estimate of the Gaussian-smoothed solution near ``xi`` at ``T``.

    Start points are drawn from a Gaussian proposal around ``xi``; each
    path of the ``(a, -b)`` diffusion carries the forward multiplier
    ``V`` (``dV = -V (q + c) dt``, so the backward multiplier is
    ``inv(V(T)) V(t)``), the weight ``exp(-int div b)``, the killing
    indicator and the source integral restarted at each wall touch.  Wall
    touches between steps are detected with the Brownian-bridge crossing
    probability.  The result estimates ``int K(x - xi) Psi(x, T) dx`` for a
    normalized Gaussian ``K`` of width ``bandwidth``; compare it with
    :meth:`FDSolution.smoothed`.
    """
    xi = np.asarray(xi, dtype=float)
    k = problem.k
    nsteps = max(1, int(np.ceil(T / dt - 1e-9)))
    dt = T / nsteps
    spread = np.sqrt(2.0 * problem.a_max * T + bandwidth ** 2)
    z0 = rng.block_normals(seed, _STREAM_START, 0, 0, (n_paths, 2))
    eta = xi + spread * z0
    log_q = -0.5 * np.sum(z0 ** 2, axis=1) - np.log(2 * np.pi * spread ** 2)
    x = eta.copy()
    inside = (x[:, 1] > 0) if problem.half_plane else np.ones(n_paths, dtype=bool)
    alive = inside.copy()
    start_w = np.where(inside, np.exp(-log_q), 0.0)
    V = np.tile(np.eye(k), (n_paths, 1, 1))
    source = np.zeros((n_paths, k))
    log_div = np.zeros(n_paths)
    for n in range(nsteps):
        t = n * dt
        G = problem.q(x, t) + problem.c(x, t)[:, None, None] * np.eye(k)
        in_d = (x[:, 1] > 0) if problem.half_plane else np.ones(n_paths, dtype=bool)
        G = np.where(in_d[:, None, None], G, 0.0)
        src = problem.f(x, t) * in_d[:, None]
        source += np.einsum("nij,nj->ni", V, src) * dt
        log_div -= problem.div_b(x, t) * dt
        V = _multiplier_step(V, G, dt)
        a = problem.a(x, t)
        drift = problem.grad_a(x, t) - problem.b(x, t)
        noise = rng.block_normals(seed, _STREAM_PATH, 0, n + 1, (n_paths, 2))
        x_new = x + drift * dt + np.sqrt(2.0 * a * dt)[:, None] * noise
        if problem.half_plane:
            u = rng.block_uniforms(seed, _STREAM_KILL, 0, n + 1, n_paths)
            both = (x[:, 1] > 0) & (x_new[:, 1] > 0)
            p_cross = np.exp(-np.where(both, x[:, 1] * x_new[:, 1], 0.0) / (a * dt))
            touched = (x_new[:, 1] <= 0) | (both & (u < p_cross))
            alive &= ~touched
            source[touched] = 0.0
        x = x_new
    if not (np.all(np.isfinite(V)) and np.all(np.isfinite(source))):
        raise NonFiniteError("non-finite multiplier along a path", term="multiplier")
    end_in = (x[:, 1] > 0) if problem.half_plane else np.ones(n_paths, dtype=bool)
    carried = np.where(alive[:, None], problem.psi0(eta), 0.0) + source
    vals = np.linalg.solve(V, carried[..., None])[..., 0]
    r2 = np.sum((x - xi) ** 2, axis=1)
    K = np.exp(-0.5 * r2 / bandwidth ** 2) / (2 * np.pi * bandwidth ** 2)
    w = start_w * np.exp(log_div) * K * end_in
    samples = w[:, None] * vals
    return Estimate(value=samples.mean(axis=0),
                    se=samples.std(axis=0, ddof=1) / np.sqrt(n_paths), n_paths=n_paths)


def survival_probability(h, a, T):
    """Chance that ``sqrt(2a) B`` started at height ``h`` stays above 0 up to ``T``."""
    return erf(h / np.sqrt(4.0 * a * T))


# --- randomized problems ---------------------------------------------------

def random_problem(seed, k=2, box=(-4.0, 4.0, 0.0, 4.0)):
    """Smooth bounded half-plane problem with trigonometric coefficients."""
    g = np.random.default_rng(seed)
    a0 = g.uniform(0.3, 0.6)
    amp_a = g.uniform(0.0, 0.2) * a0
    wa = g.uniform(0.5, 1.5, size=2)
    pb = g.uniform(0, 2 * np.pi, size=2)
    bb = g.uniform(-0.5, 0.5, size=2)
    wb = g.uniform(0.5, 1.5, size=2)
    c0 = g.uniform(-0.5, 0.5)
    wc = g.uniform(0.5, 1.5)
    Q = g.uniform(-0.5, 0.5, size=(k, k))
    wq = g.uniform(0.5, 1.5)
    F = g.uniform(-1.0, 1.0, size=k)
    center = np.array([g.uniform(-0.5, 0.5), g.uniform(1.2, 1.8)])
    A = g.uniform(0.5, 1.5, size=k)

    def a(x, t):
        return a0 + amp_a * np.sin(wa[0] * x[:, 0]) * np.cos(wa[1] * x[:, 1])

    def grad_a(x, t):
        return amp_a * np.stack([wa[0] * np.cos(wa[0] * x[:, 0]) * np.cos(wa[1] * x[:, 1]),
                                 -wa[1] * np.sin(wa[0] * x[:, 0]) * np.sin(wa[1] * x[:, 1])],
                                axis=-1)

    def b(x, t):
        return np.stack([bb[0] * np.sin(wb[0] * x[:, 1] + pb[0]),
                         bb[1] * np.cos(wb[1] * x[:, 0] + pb[1])], axis=-1)

    def div_b(x, t):
        return np.zeros(len(x))

    def c(x, t):
        return c0 * np.cos(wc * x[:, 0])

    def q(x, t):
        return Q[None] * np.sin(wq * (x[:, 0] + x[:, 1]))[:, None, None]

    def f(x, t):
        bump = np.exp(-np.sum((x - center) ** 2, axis=1))
        return F[None] * bump[:, None]

    def psi0(x):
        bump = np.exp(-2.0 * np.sum((x - center) ** 2, axis=1))
        return A[None] * bump[:, None]

    return OracleProblem(k=k, a=a, grad_a=grad_a, b=b, div_b=div_b, c=c, q=q, f=f,
                         psi0=psi0, half_plane=True, box=box, a_max=a0 + amp_a,
                         label=f"random-{seed}")


# --- analytic vortex patch -------------------------------------------------

VORTEX_CENTER = np.array([0.0, np.pi])
VORTEX_RADIUS = 1.0
VORTEX_CIRCULATION = np.pi / 4.0  # integral of (1 - r^2)^3 over the unit disk


def vortex_omega(x, center=VORTEX_CENTER):
    x = np.asarray(x, dtype=float)
    r2 = np.sum((x - center) ** 2, axis=-1)
    return np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 3, 0.0)


def analytic_test_vortex(x, center=VORTEX_CENTER):
    """Velocity and vorticity of the patch ``omega = (1 - r^2)^3`` (``r < 1``).

    The velocity is the half-plane Biot-Savart integral of the patch: the
    free-space part is the swirl of the enclosed circulation and the image
    part, harmonic inside the patch, equals the total circulation times the
    image kernel at the centre.
    """
    x = np.asarray(x, dtype=float)
    d = x - center
    r2 = np.sum(d * d, axis=-1)
    inner = 1.0 - np.minimum(r2, 1.0)
    circ = VORTEX_CIRCULATION * (1.0 - inner ** 4)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(r2 > 0, circ / (2 * np.pi * r2), 0.0)
    free = scale[..., None] * np.stack([-d[..., 1], d[..., 0]], axis=-1)
    p = x[..., 0] - center[0]
    q = x[..., 1] + center[1]
    img = -VORTEX_CIRCULATION / (2 * np.pi * (p * p + q * q))
    image = img[..., None] * np.stack([q, p], axis=-1)
    return free + image, vortex_omega(x, center)


# --- comparison table ------------------------------------------------------

TARGETS = ((0.0, 1.0), (0.5, 1.5), (-0.5, 2.0))


def fd_reference(problem, xi, T, h=0.05, bandwidth=0.2):
    """Smoothed FD value at ``xi`` and a Richardson error estimate from ``2h``."""
    vals = []
    for hh in (h, 2 * h):
        sol = fd_solve(problem, hh, 0.9 * hh * hh / (4 * problem.a_max), T)
        vals.append(sol.smoothed(xi, bandwidth))
    return vals[0], np.abs(vals[0] - vals[1]) / 3.0


def representation_table(n_problems=5, n_paths=10_000, T=0.5, seed=0, dt=0.01,
                         bandwidth=0.2, targets=TARGETS, n_sigma=3.0):
    """Monte Carlo versus finite differences on randomized half-plane problems.

    One row per (problem, target, component) with the combined standard
    error ``sqrt(se_mc^2 + err_fd^2)`` and the verdict
    ``|mc - fd| <= n_sigma * sigma``.
    """
    rows = []
    for p in range(n_problems):
        prob = random_problem(seed + p)
        for j, xi in enumerate(targets):
            est = feynman_kac_estimate(prob, xi, T, n_paths, seed=1000 * (seed + p) + j,
                                       dt=dt, bandwidth=bandwidth)
            fd, fd_err = fd_reference(prob, xi, T, bandwidth=bandwidth)
            for c in range(prob.k):
                sigma = float(np.hypot(est.se[c], fd_err[c]))
                ok = abs(est.value[c] - fd[c]) <= n_sigma * sigma
                rows.append({"problem": prob.label, "target_x1": xi[0], "target_x2": xi[1],
                             "component": c, "mc": float(est.value[c]), "fd": float(fd[c]),
                             "sigma": sigma, "verdict": "pass" if ok else "fail"})
    return rows

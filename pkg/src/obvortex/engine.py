"""Time loop coupling the particle ensembles to the grid fields.

Coupling is explicit: the grid at ``t_n`` is built from the ensembles at
``t_n``, the particles then advance using that grid, and the grid at
``t_{n+1}`` is rebuilt from the moved particles.  Wall traces used at
``t_{n+1}`` are the estimates from the ``t_n`` grid, except the wall
temperature and its tangential derivative, which are known exactly.
"""

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np

from . import particles
from .errors import ObvortexError, StepError
from .fields import (BoundaryData, GridInterpolator, boundary_temperature,
                     boundary_temperature_gradient_1, derive_grid_fields,
                     estimate_boundary_values, make_grid, particle_integrands,
                     represent_fields, update_density)


@dataclass
class SimState:
    cfg: object
    step: int
    t: float
    ensembles: dict
    grid: object
    boundary: BoundaryData
    counters: dict = field(default_factory=lambda: {"clamped": 0})


def _zero_scalar(p):
    return np.zeros(len(p))


def _zero_vector(p):
    return np.zeros((len(p), 2))


def default_initial(cfg):
    """Rest start: no vorticity, no expansion, uniform temperature ``theta0``."""
    return {
        "u": _zero_vector,
        "theta": lambda p: np.full(len(p), float(cfg.theta0)),
        "omega": _zero_scalar,
        "phi": _zero_scalar,
        "Theta": _zero_vector,
        "omega_b": lambda x1: np.zeros(len(x1)),
        "phi_b": lambda x1: np.zeros(len(x1)),
        "Theta_b": lambda x1: np.zeros((len(x1), 2)),
    }


def initialize(cfg, initial=None):
    """State at ``t = 0``; ``initial`` overrides entries of :func:`default_initial`."""
    init = default_initial(cfg)
    init.update(initial or {})
    grid = make_grid(cfg)
    pts = grid.points()
    n2, n1 = grid.shape
    grid.u = np.asarray(init["u"](pts), dtype=float).reshape(n2, n1, 2)
    grid.u[0] = 0.0
    grid.theta = np.asarray(init["theta"](pts), dtype=float).reshape(n2, n1)
    derive_grid_fields(grid)
    boundary = estimate_boundary_values(grid, cfg, 0.0)
    ens = particles.init_lattice(cfg, init)
    return SimState(cfg=cfg, step=0, t=0.0, ensembles=ens, grid=grid, boundary=boundary)


def _lagged_boundary(boundary, t, cfg):
    """Traces for the next evaluation: estimated parts kept, exact parts refreshed."""
    Tb = boundary.Theta_b.copy()
    Tb[:, 0] = boundary_temperature_gradient_1(boundary.x1, t, cfg)
    return dataclasses.replace(boundary, Theta_b=Tb,
                               theta_b=boundary_temperature(boundary.x1, t, cfg), t=t)


def _jacobian(vals, transpose=False):
    S = np.stack([np.stack([vals["S11"], vals["S12"]], axis=-1),
                  np.stack([vals["S21"], vals["S22"]], axis=-1)], axis=-2)
    return np.swapaxes(S, -1, -2) if transpose else S


def _advance_kind(kind, ens, interp, boundary, state, cfg):
    dt = cfg.dt
    vals = interp(ens.pos)
    force = particle_integrands(kind, ens, vals, boundary, state.t, cfg)
    gen = _jacobian(vals, transpose=True) if kind == "Y" else None
    cell = cfg.s ** 2 / cfg.N_copies
    ens = particles.accumulate(ens, vals["phi"], force, dt, cell, gen, cfg.multiplier)
    u = np.stack([vals["u1"], vals["u2"]], axis=-1)
    rho = vals["rho"]
    noise = particles.step_noise(cfg, kind, state.step, len(ens) // cfg.N_copies)
    moved = particles.em_step(ens, u, rho, dt, noise, cfg)
    for _ in range(cfg.picard - 1):
        ahead = interp(moved.pos)
        u_mid = 0.5 * (u + np.stack([ahead["u1"], ahead["u2"]], axis=-1))
        moved = particles.em_step(ens, u_mid, rho, dt, noise, cfg)
    return particles.update_indicators(moved)


def step(state, pool=None):
    """Advance ``state`` by one time step and return the new state."""
    cfg = state.cfg
    try:
        interp = GridInterpolator(state.grid)
        ens = {k: _advance_kind(k, state.ensembles[k], interp, state.boundary, state, cfg)
               for k in particles.KINDS}
        rho = update_density(state.grid, cfg.dt, state.boundary, cfg)
        t_new = (state.step + 1) * cfg.dt
        template = dataclasses.replace(state.grid, rho=rho)
        lagged = _lagged_boundary(state.boundary, t_new, cfg)
        grid = represent_fields(template, ens, lagged, t_new, cfg, pool)
        boundary = estimate_boundary_values(grid, cfg, t_new)
    except ObvortexError as err:
        raise StepError(str(err), state.step, state.t, cause=err) from err
    counters = dict(state.counters)
    counters["clamped"] = counters.get("clamped", 0) + interp.clamped
    return SimState(cfg=cfg, step=state.step + 1, t=t_new, ensembles=ens,
                    grid=grid, boundary=boundary, counters=counters)


def snapshot_steps(cfg):
    """Map of step index to snapshot time."""
    return {int(round(t / cfg.dt)) if cfg.T > 0 else 0: t for t in cfg.snapshots}


def simulate(cfg, on_snapshot=None, threads=1, initial=None):
    """Run to ``T`` calling ``on_snapshot(state)`` at every snapshot step.

    Returns the final state.  ``threads > 1`` spreads field evaluation over
    a thread pool; results do not depend on the thread count.
    """
    state = initialize(cfg, initial)
    marks = snapshot_steps(cfg)
    ctx = ThreadPoolExecutor(max_workers=threads) if threads > 1 else nullcontext()
    with ctx as pool:
        if 0 in marks and on_snapshot:
            on_snapshot(state)
        for n in range(cfg.n_steps):
            state = step(state, pool)
            if state.step in marks and on_snapshot:
                on_snapshot(state)
    return state


def estimate_cost(cfg):
    """Kernel evaluations for a run: steps x targets x sources."""
    grid = make_grid(cfg)
    n2, n1 = grid.shape
    targets = (n2 - 1) * n1
    sites = 2 * cfg.n_half * cfg.n_half * cfg.N_copies
    strip = n1 * int(cfg.strip_points)
    per_step = targets * (2 * sites + strip) + targets * (sites + strip)
    return {
        "steps": cfg.n_steps,
        "grid_nodes": n1 * n2,
        "particles_per_kind": sites,
        "kernel_evals_per_step": per_step,
        "kernel_evals_total": per_step * cfg.n_steps,
    }

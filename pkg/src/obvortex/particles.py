"""Lattice ensembles of the X (vorticity), Y (temperature gradient) and Z
(expansion rate) diffusions.

An :class:`Ensemble` stores one kind of particle as parallel arrays, one
row per (copy, lattice site).  Besides the position each particle carries

* ``alive``: the path has never reached the wall (killed initial weight),
* ``phi_int``: running integral of the expansion rate while inside,
* ``W``: forward multiplier, ``dW/ds = W M 1_D`` with ``W(0) = I``, so the
  backward multiplier ``R(t; s)`` with terminal value ``I`` at ``t`` is
  ``inv(W(t)) @ W(s)``,
* ``force``: running source integral, zeroed whenever the wall is touched
  so only contributions after the last touch survive.
"""

import csv
import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import rng
from .cutoff import psi
from .errors import GridError, NonFiniteError, PositivityError

KINDS = ("X", "Y", "Z")
VECTOR_KINDS = ("Y",)


@dataclass
class Ensemble:
    kind: str
    sites: np.ndarray  # (n, 2) lattice indices (i1, i2)
    copy: np.ndarray  # (n,)
    pos: np.ndarray  # (n, 2)
    alive: np.ndarray  # (n,) bool
    phi_int: np.ndarray  # (n,)
    W: np.ndarray  # (n, 2, 2)
    force: np.ndarray  # (n,) or (n, 2)
    weight: np.ndarray  # (n,) or (n, 2)

    def __len__(self):
        return len(self.pos)

    @property
    def det_W(self):
        return np.linalg.det(self.W)

    def copy_state(self):
        return dataclasses.replace(self, **{
            f.name: np.array(getattr(self, f.name), copy=True)
            for f in dataclasses.fields(self) if f.name != "kind"})


def lattice_sites(cfg):
    """Cell-centred lattice over ``[-L, L] x [0, L]`` with mesh ``s``.

    Returns integer indices ``(n, 2)`` and positions ``(n, 2)``, rows ordered
    by height then by ``i1``.  The lattice is symmetric under ``x1 -> -x1``.
    """
    if not (cfg.s > 0):
        raise GridError("mesh size must be positive")
    n = cfg.n_half
    if n < 1:
        raise GridError("region holds no lattice site")
    i1 = np.arange(-n, n)
    i2 = np.arange(0, n)
    g1, g2 = np.meshgrid(i1, i2)
    sites = np.stack([g1.ravel(), g2.ravel()], axis=-1)
    pos = (sites + 0.5) * cfg.s
    return sites, pos


def mirror_permutation(cfg):
    """Index map sending each lattice site to its mirror image in ``x1``."""
    n1 = 2 * cfg.n_half
    idx = np.arange(n1 * cfg.n_half).reshape(cfg.n_half, n1)
    return idx[:, ::-1].ravel()


def _eps_part(value, boundary, height, eps):
    """``f - f_b psi(x2 / eps)`` for scalar or vector fields."""
    cut = psi(height / eps)
    if np.ndim(value) > 1:
        cut = cut[:, None]
    return value - boundary * cut


def init_lattice(cfg, initial):
    """One particle per (copy, site, kind), started at its site.

    ``initial`` maps ``omega``, ``phi``, ``Theta`` to callables of positions
    ``(n, 2)`` and ``omega_b``, ``phi_b``, ``Theta_b`` to callables of
    ``x1`` giving the wall traces at time 0.
    """
    sites, pos = lattice_sites(cfg)
    ncp = int(cfg.N_copies)
    cell = cfg.s ** 2 / ncp
    x1, h = pos[:, 0], pos[:, 1]
    eps = cfg.eps
    weights = {
        "X": _eps_part(initial["omega"](pos), initial["omega_b"](x1), h, eps),
        "Y": _eps_part(initial["Theta"](pos), initial["Theta_b"](x1), h, eps),
        "Z": _eps_part(initial["phi"](pos), initial["phi_b"](x1), h, eps),
    }
    out = {}
    n = len(pos)
    for kind in KINDS:
        w = np.tile(np.asarray(weights[kind], dtype=float) * cell,
                    (ncp,) + (1,) * (weights[kind].ndim - 1))
        out[kind] = Ensemble(
            kind=kind,
            sites=np.tile(sites, (ncp, 1)),
            copy=np.repeat(np.arange(ncp), n),
            pos=np.tile(pos, (ncp, 1)),
            alive=np.ones(n * ncp, dtype=bool),
            phi_int=np.zeros(n * ncp),
            W=np.tile(np.eye(2), (n * ncp, 1, 1)),
            force=np.zeros_like(w),
            weight=w,
        )
    return out


def diffusivity(kind, rho, cfg):
    """Diffusion coefficient of each kind: ``mu/rho``, ``kappa/rho0``, ``(mu+lambda)/rho``."""
    if kind == "Y":
        return np.full(np.shape(rho), cfg.kappa / cfg.rho0)
    if cfg.freeze_rho:
        rho = np.full(np.shape(rho), cfg.rho0)
    if kind == "X":
        return cfg.mu / rho
    if kind == "Z":
        return (cfg.mu + cfg.lam) / rho
    raise ValueError(f"unknown particle kind {kind!r}")


def step_noise(cfg, kind, step, n_sites):
    """Normals for every particle of ``kind`` at ``step``, copy-major.

    With ``paired_noise`` each odd copy replays the previous copy's noise on
    the mirrored lattice with the ``x1`` component negated.
    """
    stream = rng.KIND_ID[kind]
    blocks = []
    mirror = mirror_permutation(cfg) if cfg.paired_noise else None
    for c in range(int(cfg.N_copies)):
        if mirror is not None and c % 2 == 1:
            z = rng.block_normals(cfg.seed, stream, c - 1, step, (n_sites, 2))[mirror]
            z[:, 0] *= -1.0
        else:
            z = rng.block_normals(cfg.seed, stream, c, step, (n_sites, 2))
        blocks.append(z)
    return np.concatenate(blocks, axis=0)


def em_step(ens, u_at_p, rho_at_p, dt, noise, cfg):
    """One Euler-Maruyama step ``x += u dt + sqrt(2 nu dt) noise``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    u_at_p = np.asarray(u_at_p, dtype=float)
    rho_at_p = np.asarray(rho_at_p, dtype=float)
    if not np.all(np.isfinite(u_at_p)):
        raise NonFiniteError("non-finite velocity at particle", term=ens.kind)
    if np.any(rho_at_p <= 0):
        raise PositivityError("non-positive density at particle")
    nu = diffusivity(ens.kind, rho_at_p, cfg)
    pos = ens.pos + u_at_p * dt + np.sqrt(2.0 * nu * dt)[:, None] * noise
    return dataclasses.replace(ens, pos=pos)


def update_indicators(ens):
    """Kill the initial weight and reset the source sum for wall touches."""
    touched = ens.pos[:, 1] <= 0.0
    if not np.any(touched):
        return ens
    force = ens.force.copy()
    force[touched] = 0.0
    return dataclasses.replace(ens, alive=ens.alive & ~touched, force=force)


def _advance_multiplier(W, M, dt, inside, method):
    if method == "expm":
        step = scipy.linalg.expm(M * (dt * inside)[:, None, None])
        return W @ step
    return W + (W @ M) * (dt * inside)[:, None, None]


def accumulate(ens, phi_at_p, force_at_p, dt, cell, generator=None, method="euler"):
    """Add one step of the running integrals for particles inside the domain.

    ``force_at_p`` is the source integrand at the pre-step position
    (scalar per particle for X and Z, a 2-vector for Y).  ``generator`` is
    the multiplier matrix ``M`` in ``dW/ds = W M 1_D`` (the transposed
    velocity Jacobian for Y); omit it for kinds without a multiplier.
    ``cell`` is the lattice weight of one particle.
    """
    phi_at_p = np.asarray(phi_at_p, dtype=float)
    force_at_p = np.asarray(force_at_p, dtype=float)
    if not (np.all(np.isfinite(phi_at_p)) and np.all(np.isfinite(force_at_p))):
        raise NonFiniteError("non-finite integrand at particle", term=ens.kind)
    inside = (ens.pos[:, 1] > 0.0).astype(float)
    scale = inside * dt * cell
    if ens.kind == "X":
        contrib = np.exp(ens.phi_int) * force_at_p * scale
    elif ens.kind == "Y":
        contrib = np.einsum("nij,nj->ni", ens.W, force_at_p) * scale[:, None]
    else:
        contrib = force_at_p * scale
    W = ens.W
    if generator is not None:
        generator = np.asarray(generator, dtype=float)
        if not np.all(np.isfinite(generator)):
            raise NonFiniteError("non-finite velocity gradient", term=ens.kind)
        W = _advance_multiplier(W, generator, dt, inside, method)
    return dataclasses.replace(
        ens,
        force=ens.force + contrib,
        phi_int=ens.phi_int + phi_at_p * inside * dt,
        W=W,
    )


def write_particles(ensembles, path):
    """Dump ensembles in the particle CSV format."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["site_i1", "site_i2", "kind", "x1", "x2", "alive", "phi_integral", "det_W"])
        for kind in KINDS:
            ens = ensembles[kind]
            det = ens.det_W
            for j in range(len(ens)):
                w.writerow([int(ens.sites[j, 0]), int(ens.sites[j, 1]), kind,
                            repr(float(ens.pos[j, 0])), repr(float(ens.pos[j, 1])),
                            int(ens.alive[j]), repr(float(ens.phi_int[j])),
                            repr(float(det[j]))])

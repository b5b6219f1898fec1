import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats, special

from obvortex import particles, rng
from obvortex.config import REDUCED, SimConfig
from obvortex.cutoff import psi
from obvortex.engine import default_initial
from obvortex.errors import NonFiniteError, PositivityError

from helpers import binomial_pvalue, free_ensemble, variance_pvalue


def test_lattice_counts():
    sites, pos = particles.lattice_sites(SimConfig())
    assert len(sites) == 80 * 40
    sites, pos = particles.lattice_sites(SimConfig(**REDUCED))
    assert len(sites) == 20 * 10
    assert np.all(pos[:, 1] > 0) and np.all(np.abs(pos[:, 0]) < 2 * np.pi)


def test_lattice_mirror_symmetric():
    cfg = SimConfig(**REDUCED)
    _, pos = particles.lattice_sites(cfg)
    m = particles.mirror_permutation(cfg)
    assert np.allclose(pos[m, 0], -pos[:, 0]) and np.array_equal(pos[m, 1], pos[:, 1])


def test_rest_start_has_zero_weights():
    cfg = SimConfig(**REDUCED)
    ens = particles.init_lattice(cfg, default_initial(cfg))
    for kind in particles.KINDS:
        e = ens[kind]
        assert len(e) == 200 * cfg.N_copies
        assert not np.any(e.weight) and not np.any(e.force) and not np.any(e.phi_int)
        assert np.all(e.alive) and np.all(e.W == np.eye(2))


def test_initial_weight_is_cut_off_field_times_cell():
    cfg = SimConfig(**REDUCED)
    init = default_initial(cfg)
    init["omega"] = lambda p: 1.0 + p[:, 0] ** 2
    init["omega_b"] = lambda x1: 1.0 + x1 ** 2
    ens = particles.init_lattice(cfg, init)["X"]
    p = ens.pos[: len(ens) // cfg.N_copies]
    expect = (1 + p[:, 0] ** 2) * (1 - psi(p[:, 1] / cfg.eps)) * cfg.s ** 2 / cfg.N_copies
    assert np.allclose(ens.weight[: len(p)], expect)


def test_em_step_deterministic_parts():
    cfg = SimConfig()
    ens = free_ensemble("X", [[0.5, 1.0]])
    out = particles.em_step(ens, np.zeros((1, 2)), np.ones(1), 0.1, np.zeros((1, 2)), cfg)
    assert np.array_equal(out.pos, ens.pos)
    out = particles.em_step(ens, np.array([[1.0, 0.0]]), np.ones(1), 0.1, np.zeros((1, 2)), cfg)
    assert np.allclose(out.pos, [[0.6, 1.0]])


def test_em_step_errors():
    cfg = SimConfig()
    ens = free_ensemble("Z", [[0.5, 1.0]])
    with pytest.raises(PositivityError):
        particles.em_step(ens, np.zeros((1, 2)), np.zeros(1), 0.1, np.zeros((1, 2)), cfg)
    with pytest.raises(NonFiniteError):
        particles.em_step(ens, np.full((1, 2), np.nan), np.ones(1), 0.1, np.zeros((1, 2)), cfg)


@pytest.mark.parametrize("kind,nu", [("X", 0.15), ("Y", 1.0), ("Z", 0.3)])
def test_marginals_gaussian_with_kind_variance(kind, nu):
    # u = 0, rho = 1: after n steps the displacement is N(0, 2 nu t)
    cfg = SimConfig(mu=0.15, lam=0.15, kappa=1.0)
    n, steps, dt = 100_000, 5, 0.1
    ens = free_ensemble(kind, np.tile([0.0, 50.0], (n, 1)))
    for k in range(steps):
        ens = particles.em_step(ens, np.zeros((n, 2)), np.ones(n), dt,
                                rng.block_normals(9, rng.KIND_ID[kind], 0, k, (n, 2)), cfg)
    t = steps * dt
    d = ens.pos - [0.0, 50.0]
    for c in range(2):
        assert stats.kstest(d[:, c] / np.sqrt(2 * nu * t), "norm").pvalue > 1e-3
        assert variance_pvalue(d[:, c], 2 * nu * t) > 1e-3


def test_kinds_draw_independent_noise():
    cfg = SimConfig(**REDUCED)
    zx = particles.step_noise(cfg, "X", 3, 200)
    zy = particles.step_noise(cfg, "Y", 3, 200)
    assert abs(np.corrcoef(zx.ravel(), zy.ravel())[0, 1]) < 0.15


def test_paired_noise_is_mirrored():
    cfg = SimConfig(**REDUCED)
    z = particles.step_noise(cfg, "Y", 0, 200)
    m = particles.mirror_permutation(cfg)
    assert np.array_equal(z[200:400], z[:200][m] * [-1.0, 1.0])


def test_update_indicators():
    ens = free_ensemble("Y", [[0.0, 1.0], [0.0, -0.01]])
    ens.force[:] = 1.0
    out = particles.update_indicators(ens)
    assert list(out.alive) == [True, False]
    assert np.array_equal(out.force, [[1.0, 1.0], [0.0, 0.0]])
    # back inside: still dead, accumulation resumes
    out.pos[1, 1] = 0.5
    out = particles.accumulate(out, np.zeros(2), np.ones((2, 2)), 0.1, 1.0)
    out = particles.update_indicators(out)
    assert not out.alive[1] and np.allclose(out.force[1], [0.1, 0.1])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_death_is_monotone(seed):
    cfg = SimConfig(kappa=1.0)
    ens = free_ensemble("Y", np.tile([0.0, 0.3], (50, 1)))
    prev = ens.alive.copy()
    for k in range(20):
        ens = particles.em_step(ens, np.zeros((50, 2)), np.ones(50), 0.05,
                                rng.block_normals(seed, 1, 0, k, (50, 2)), cfg)
        ens = particles.update_indicators(ens)
        assert not np.any(ens.alive & ~prev)
        prev = ens.alive.copy()


def test_killed_mass_matches_images_formula():
    # discrete monitoring shifts the barrier by 0.5826 sigma sqrt(dt)
    cfg = SimConfig(mu=0.5)
    n, h, dt, T = 100_000, 1.0, 1e-3, 0.5
    nu = 0.5
    ens = free_ensemble("X", np.tile([0.0, h], (n, 1)))
    for k in range(int(round(T / dt))):
        ens = particles.em_step(ens, np.zeros((n, 2)), np.ones(n), dt,
                                rng.block_normals(4, 0, 0, k, (n, 2)), cfg)
        ens = particles.update_indicators(ens)
    shift = 0.5826 * np.sqrt(2 * nu * dt)
    p_survive = special.erf((h + shift) / np.sqrt(4 * nu * T))
    assert binomial_pvalue(np.count_nonzero(ens.alive), n, p_survive) > 1e-3


def test_accumulate_constant_phi():
    ens = free_ensemble("Z", [[0.0, 1.0], [0.0, -1.0]])
    for _ in range(7):
        ens = particles.accumulate(ens, np.full(2, 0.3), np.zeros(2), 0.1, 1.0)
    assert ens.phi_int[0] == pytest.approx(0.21, abs=1e-15)
    assert ens.phi_int[1] == 0.0


def test_zero_generator_keeps_identity():
    ens = free_ensemble("Y", [[0.0, 1.0]])
    for _ in range(5):
        ens = particles.accumulate(ens, np.zeros(1), np.zeros((1, 2)), 0.1, 1.0, np.zeros((1, 2, 2)))
    assert np.array_equal(ens.W[0], np.eye(2))


@pytest.mark.parametrize("method", ["euler", "expm"])
def test_scalar_generator(method):
    sigma, dt, n = 0.4, 0.01, 100
    ens = free_ensemble("Y", [[0.0, 1.0]])
    M = sigma * np.eye(2)[None]
    for _ in range(n):
        ens = particles.accumulate(ens, np.zeros(1), np.zeros((1, 2)), dt, 1.0, M, method)
    tol = 1e-12 if method == "expm" else 5 * sigma ** 2 * dt
    assert np.allclose(ens.W[0], np.exp(sigma * n * dt) * np.eye(2), rtol=tol)
    R = np.linalg.inv(ens.W[0])
    assert np.allclose(R, np.exp(-sigma * n * dt) * np.eye(2), rtol=tol)


def test_force_uses_pre_step_multiplier():
    ens = free_ensemble("Y", [[0.0, 1.0]])
    ens.W[0] = [[2.0, 0.0], [0.0, 3.0]]
    out = particles.accumulate(ens, np.zeros(1), np.ones((1, 2)), 0.5, 2.0, np.eye(2)[None])
    assert np.allclose(out.force[0], [2.0, 3.0])


def test_x_force_carries_expansion_weight():
    ens = free_ensemble("X", [[0.0, 1.0]])
    ens.phi_int[0] = np.log(3.0)
    out = particles.accumulate(ens, np.zeros(1), np.ones(1), 0.1, 1.0)
    assert out.force[0] == pytest.approx(0.3)


def test_write_particles(tmp_path):
    cfg = SimConfig(**REDUCED)
    ens = particles.init_lattice(cfg, default_initial(cfg))
    path = tmp_path / "p.csv"
    particles.write_particles(ens, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "site_i1,site_i2,kind,x1,x2,alive,phi_integral,det_W"
    assert len(lines) == 1 + 3 * 200 * cfg.N_copies

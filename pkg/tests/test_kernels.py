import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from obvortex import kernels
from obvortex.errors import BoundaryEvaluationError, SingularPointError, UnsupportedDimensionError


def test_green_free_values():
    assert kernels.green_free(2, np.array([1.0, 0.0]), np.array([0.0, 0.0])) == 0.0
    assert kernels.green_free(2, np.array([2.0, 0.0]), np.zeros(2)) == pytest.approx(0.1103178, abs=1e-7)
    v = kernels.green_free(3, np.array([0.0, 0.0, 1.0]), np.zeros(3))
    assert v == pytest.approx(-0.0795775, abs=1e-7)


def test_green_free_errors():
    with pytest.raises(SingularPointError):
        kernels.green_free(2, np.ones(2), np.ones(2))
    with pytest.raises(UnsupportedDimensionError):
        kernels.green_free(4, np.ones(4), np.zeros(4))


def test_green_half_value():
    v = kernels.green_half(2, np.array([0.0, 1.0]), np.array([0.0, 2.0]))
    assert v == pytest.approx(-np.log(3) / (2 * np.pi), rel=1e-12)
    assert v == pytest.approx(-0.1748500, abs=1e-6)


@pytest.mark.parametrize("d", [2, 3])
def test_green_half_boundary_vanishes(d):
    g = np.random.default_rng(1)
    x = g.uniform(0.1, 2.0, size=(20, d))
    y = g.uniform(-2.0, 2.0, size=(20, d))
    y[:, -1] = 0.0
    assert np.all(kernels.green_half(d, y, x) == 0.0)
    assert np.all(kernels.green_half(d, x, y) == 0.0)


def test_biot_savart_value():
    K = kernels.biot_savart_kernel(2, np.array([0.0, 1.0]), np.array([0.0, 2.0]))
    assert K[0] == 0.0
    assert K[1] == pytest.approx(-0.2122066, abs=1e-7)


def test_biot_savart_tangential_symmetry():
    # wall source directly below the target: no tangential component
    K = kernels.biot_savart_kernel(2, np.array([0.7, 0.0]), np.array([0.7, 1.3]))
    assert K[0] == 0.0


@pytest.mark.parametrize("d", [2, 3])
def test_biot_savart_matches_fd(d):
    g = np.random.default_rng(2)
    h = 1e-6
    for _ in range(100):
        x = g.uniform(-1, 1, d)
        x[-1] = g.uniform(0.5, 2)
        y = g.uniform(-1, 1, d)
        y[-1] = g.uniform(0.5, 2)
        if np.linalg.norm(y - x) < 0.3:
            continue
        K = kernels.biot_savart_kernel(d, y, x)
        fd = np.array([(kernels.green_half(d, y + h * e, x) - kernels.green_half(d, y - h * e, x)) / (2 * h)
                       for e in np.eye(d)])
        assert np.linalg.norm(K - fd) <= 1e-5 * np.linalg.norm(K)


def test_biot_savart_poles():
    with pytest.raises(SingularPointError):
        kernels.biot_savart_kernel(2, np.array([0.0, 1.0]), np.array([0.0, 1.0]))


def test_mollified_kernel_limits():
    x = np.array([0.3, 1.2])
    eps = 0.05
    assert np.array_equal(kernels.biot_savart_kernel_mollified(x, x, eps), [0.0, 0.0])
    y = x + np.array([np.sqrt(eps), 0.0])
    ratio = kernels.biot_savart_kernel_mollified(y, x, eps) / kernels.biot_savart_kernel(2, y, x)
    assert np.allclose(ratio, 0.6321206, atol=1e-7)
    far = x + np.array([0.0, 10 * np.sqrt(eps)])
    exact = kernels.biot_savart_kernel(2, far, x)
    assert np.allclose(kernels.biot_savart_kernel_mollified(far, x, eps), exact, rtol=1e-40, atol=0)


def test_mollified_kernel_bounded_near_source():
    x = np.array([0.0, 1.0])
    r = np.logspace(-8, -1, 8)
    K = [kernels.biot_savart_kernel_mollified(x + [ri, 0.0], x, 0.05) for ri in r]
    assert np.all(np.isfinite(K))
    assert np.linalg.norm(K[0]) < 1e-3


def test_poisson_kernel():
    assert kernels.poisson_boundary_kernel(2, np.array([0.0, 1.0]), np.array([0.0])) == pytest.approx(1 / np.pi)
    with pytest.raises(BoundaryEvaluationError):
        kernels.poisson_boundary_kernel(2, np.array([0.0, 0.0]), np.array([1.0]))


def test_poisson_mass_full_line():
    edges = np.concatenate([[-1e12], np.linspace(-50, 50, 2001), [1e12]])
    w = kernels.poisson_panel_weights(np.array([[0.3, 0.8]]), edges)
    assert w.sum() == pytest.approx(1.0, abs=1e-10)


def test_poisson_mass_truncated():
    w = kernels.poisson_panel_weights(np.array([[0.0, 1.0]]), np.linspace(-100, 100, 4001))
    assert w.sum() == pytest.approx(2 * np.arctan(100) / np.pi, abs=1e-12)
    assert w.sum() == pytest.approx(0.99363, abs=1e-5)


def test_poisson_3d_normalized():
    # the half-space kernel integrates to one over the wall
    r = np.linspace(0, 400, 400001)
    x = np.array([0.0, 0.0, 1.0])
    b = np.stack([r, np.zeros_like(r)], axis=-1)
    P = kernels.poisson_boundary_kernel(3, x, b)
    mass = np.trapezoid(P * 2 * np.pi * r, r)
    assert mass == pytest.approx(1.0, abs=5e-3)


def test_wedge2():
    assert np.array_equal(kernels.wedge2(np.array([1.0, 0.0]), 1.0), [0.0, -1.0])
    assert np.array_equal(kernels.wedge2(np.array([2.0, -3.0]), 0.0), [0.0, 0.0])


def test_free_wedge_field_divergence_free():
    # curl part of the free-space law; the image part is not solenoidal
    g = np.random.default_rng(3)
    src = g.uniform(-1, 1, (200, 2)) + np.array([0.0, 3.0])
    w = np.exp(-np.sum((src - [0, 3]) ** 2, axis=1))

    def u(x):
        d = src - x
        K = d / (2 * np.pi * np.sum(d * d, axis=1))[:, None]
        return kernels.wedge2(K, w).sum(axis=0)

    x = np.array([2.5, 1.0])
    h = 1e-5
    div = ((u(x + [h, 0])[0] - u(x - [h, 0])[0]) + (u(x + [0, h])[1] - u(x - [0, h])[1])) / (2 * h)
    assert abs(div) < 1e-6 * np.linalg.norm(u(x)) / h


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(0.05, 5), st.floats(-5, 5), st.floats(0.05, 5))
def test_green_half_symmetric(y1, y2, x1, x2):
    y, x = np.array([y1, y2]), np.array([x1, x2])
    if np.linalg.norm(y - x) < 1e-3:
        return
    a, b = kernels.green_half(2, y, x), kernels.green_half(2, x, y)
    assert abs(a - b) <= 1e-12 * max(abs(a), 1e-300) + 1e-15


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(0.05, 5), st.floats(-5, 5), st.floats(0.05, 5))
def test_green_half_negative(y1, y2, x1, x2):
    y, x = np.array([y1, y2]), np.array([x1, x2])
    if np.linalg.norm(y - x) < 1e-3:
        return
    assert kernels.green_half(2, y, x) < 0

import numpy as np
import pytest

from robustrate.quadrature import blockwise_simpson, cumulative_simpson, simpson


def test_exact_on_quadratics():
    xs = np.linspace(0.0, 2.0, 11)
    y = 3.0 * xs**2 - 2.0 * xs + 1.0
    exact = xs**3 - xs**2 + xs
    out = cumulative_simpson(y, xs[1] - xs[0])
    assert np.allclose(out, exact, rtol=0, atol=1e-14)


def test_matches_dense_trapezoid_on_exponential():
    xs = np.linspace(0.0, 1.0, 257)
    out = simpson(np.exp(xs), xs[1] - xs[0])
    dense = np.linspace(0.0, 1.0, 1_000_001)
    oracle = np.trapezoid(np.exp(dense), dense)
    assert abs(out - oracle) < 1e-10


def test_fourth_order_convergence():
    def err(n):
        xs = np.linspace(0.0, 1.0, n + 1)
        return abs(simpson(np.sin(xs), xs[1] - xs[0]) - (1 - np.cos(1.0)))

    e1, e2 = err(64), err(128)
    assert 12 < e1 / e2 < 20


def test_trailing_axes_integrated_componentwise():
    xs = np.linspace(0.0, 1.0, 65)
    y = np.stack([xs, xs**2], axis=1)
    out = cumulative_simpson(y, xs[1] - xs[0])
    assert np.allclose(out[:, 0], xs**2 / 2, atol=1e-15)
    assert np.allclose(out[:, 1], xs**3 / 3, atol=1e-15)


def test_blockwise_matches_cumulative_differences():
    xs = np.linspace(0.0, 1.0, 8 * 10 + 1)
    y = np.cos(3 * xs)
    cum = cumulative_simpson(y, xs[1] - xs[0])
    blocks = blockwise_simpson(y, xs[1] - xs[0], 8)
    assert np.allclose(np.cumsum(blocks), cum[8::8], atol=1e-14)


def test_odd_interval_count_rejected():
    with pytest.raises(ValueError):
        cumulative_simpson(np.ones(4), 0.1)
    with pytest.raises(ValueError):
        blockwise_simpson(np.ones(10), 0.1, 3)

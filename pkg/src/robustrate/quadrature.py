"""Composite Simpson quadrature on uniform grids.

The solvers need running integrals int_0^{t_j} y ds at every grid node, not
just the total, so the workhorse here is a cumulative Simpson rule: exact
pair-of-intervals Simpson at even nodes, a three-point parabolic half-rule at
odd nodes.  Summation order is fixed, so results are bit-reproducible.
"""

from __future__ import annotations

import numpy as np


def cumulative_simpson(y: np.ndarray, dx: float) -> np.ndarray:
    """Running integral of uniformly sampled `y` from the left endpoint.

    y : samples of shape (m, ...) with m = N+1 nodes, N even and >= 2;
        extra trailing axes are integrated componentwise.
    dx : grid spacing.

    Returns an array of the same shape; out[j] ~ int_{x_0}^{x_j} y dx.
    """
    y = np.asarray(y, dtype=float)
    n_int = y.shape[0] - 1
    if n_int < 2 or n_int % 2 != 0:
        raise ValueError("need an even number (>= 2) of intervals")
    out = np.zeros_like(y)
    # even nodes: ordinary composite Simpson over interval pairs
    pair = (dx / 3.0) * (y[0:-2:2] + 4.0 * y[1:-1:2] + y[2::2])
    out[2::2] = np.cumsum(pair, axis=0)
    # odd nodes: integrate half of the local parabola through
    # (y[j-1], y[j], y[j+1]):  int = dx/12 * (5 y[j-1] + 8 y[j] - y[j+1])
    out[1::2] = out[0:-2:2] + (dx / 12.0) * (5.0 * y[0:-2:2]
                                             + 8.0 * y[1:-1:2] - y[2::2])
    return out


def simpson(y: np.ndarray, dx: float) -> float | np.ndarray:
    """Composite Simpson integral over the full uniform grid."""
    return cumulative_simpson(y, dx)[-1]


def blockwise_simpson(y: np.ndarray, dx: float, block: int) -> np.ndarray:
    """Simpson integral over each consecutive block of `block` intervals.

    y : fine-grid samples of shape (steps*block + 1, ...), block even.
    Returns shape (steps, ...): integral over [x_{s*block}, x_{(s+1)*block}].
    """
    y = np.asarray(y, dtype=float)
    if block < 2 or block % 2 != 0:
        raise ValueError("block must be even and >= 2")
    steps = (y.shape[0] - 1) // block
    if steps * block + 1 != y.shape[0]:
        raise ValueError("sample count must be steps*block + 1")
    w = np.ones(block + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= dx / 3.0
    idx = np.arange(steps)[:, None] * block + np.arange(block + 1)[None, :]
    return np.tensordot(w, y[idx], axes=([0], [1]))

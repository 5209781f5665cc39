"""Closed-form solution of the worst-case investment game.

The candidate value function is V(x, r, t) = (x^gamma/gamma) e^{f(t) r + g(t)}
with terminal conditions f(T) = g(T) = 0, where

    f(t) = gamma e^{-int_t^T kappa} int_t^T e^{int_k^T kappa} dk,
    g(t) = int_t^T [ b f  -  lam a^T f  -  |a|^2 f^2 / (2 gamma) ] ds,

equivalently  f' = kappa f - gamma  and
g' = |a|^2 f^2/(2 gamma) + lam a^T f - b f.

The saddle point of the game is

    pi*(t)  = -(f/gamma) a Sigma^{-1}          (optimal portfolio)
    eta*(t) = -lam - (f/gamma) a               (worst-case drift kernel)

and f/gamma = e^{-int kappa} int e^{int kappa} is free of gamma, so both
strategies are invariant under the risk-aversion coefficient.  Under eta*
the discounted assets pick up the excess drift -(f/gamma) Sigma a^T, i.e.
the worst-case measure is not a martingale measure unless a == 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import CoefficientCurve
from .errors import GridMismatchError, SingularCoefficientError
from .model import SIGMA_MIN_SV, MarketModel, StatePoint
from .quadrature import cumulative_simpson

DEFAULT_NODES = 2048


@dataclass(frozen=True)
class SolutionPair:
    """Solved f, g and the derived saddle strategies, all on one grid."""

    f: CoefficientCurve
    g: CoefficientCurve
    pi_star: CoefficientCurve
    eta_star: CoefficientCurve
    quadrature_nodes: int


@dataclass(frozen=True)
class ValueQuery:
    """A state together with the candidate value function evaluated there."""

    state: StatePoint
    value: float


def _uniform_grid(horizon: float, nodes: int) -> np.ndarray:
    if nodes < 16 or nodes % 2 != 0:
        raise ValueError("quadrature nodes must be even and >= 16")
    return np.linspace(0.0, horizon, nodes + 1)


def _phi_values(m: MarketModel, grid: np.ndarray) -> np.ndarray:
    """f/gamma on the grid: e^{-int_t^T kappa} int_t^T e^{int_k^T kappa} dk.

    Computed gamma-free so that strategies derived from it are exactly
    invariant under gamma.  Cumulative Simpson keeps the cost linear in the
    node count.
    """
    h = grid[1] - grid[0]
    kap = m.kappa.at(grid)
    left_int = cumulative_simpson(kap, h)          # int_0^t kappa
    k_tail = left_int[-1] - left_int               # int_t^T kappa
    growth = np.exp(k_tail)
    tail = cumulative_simpson(growth, h)
    inner = tail[-1] - tail                        # int_t^T e^{int_k^T kappa} dk
    phi = np.exp(-k_tail) * inner
    return phi


def solve_f(m: MarketModel, nodes: int = DEFAULT_NODES) -> CoefficientCurve:
    """Solve f on a uniform grid of nodes+1 points; f(T) = 0 exactly."""
    m.require_valid()
    grid = _uniform_grid(m.horizon, nodes)
    return CoefficientCurve(grid, m.gamma * _phi_values(m, grid))


def _g_integrand(m: MarketModel, grid: np.ndarray,
                 f_vals: np.ndarray) -> np.ndarray:
    a_vals = m.a.at(grid)
    lam_vals = m.lam.at(grid)
    b_vals = m.b.at(grid)
    a_sq = np.sum(a_vals * a_vals, axis=1)
    lam_a = np.sum(lam_vals * a_vals, axis=1)
    return (b_vals * f_vals - lam_a * f_vals
            - a_sq * f_vals**2 / (2.0 * m.gamma))


def solve_g(m: MarketModel, f: CoefficientCurve,
            nodes: int = DEFAULT_NODES) -> CoefficientCurve:
    """Solve g on f's grid by composite Simpson; g(T) = 0 exactly."""
    m.require_valid()
    grid = _uniform_grid(m.horizon, nodes)
    if f.breakpoints.size != grid.size or not np.allclose(
            f.breakpoints, grid, rtol=0.0, atol=1e-12):
        raise GridMismatchError(
            "f must be solved on the same uniform grid as g "
            f"({nodes} nodes over [0, {m.horizon}])")
    h = grid[1] - grid[0]
    integrand = _g_integrand(m, grid, f.values)
    running = cumulative_simpson(integrand, h)
    return CoefficientCurve(grid, running[-1] - running)


def f_prime(m: MarketModel, f: CoefficientCurve, t):
    """Exact derivative of f via its defining equation: kappa f - gamma."""
    return m.kappa.at(t) * f.at(t) - m.gamma


def g_prime(m: MarketModel, f: CoefficientCurve, t):
    """Exact derivative of g: |a|^2 f^2/(2 gamma) + lam a^T f - b f."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    vals = -_g_integrand(m, t_arr, f.at(t_arr))
    return float(vals[0]) if np.ndim(t) == 0 else vals


def _row_times_sigma_inv(rows: np.ndarray, sigmas: np.ndarray,
                         times: np.ndarray) -> np.ndarray:
    """rows[k] @ sigma[k]^{-1} for stacked row vectors and matrices."""
    sv = np.linalg.svd(sigmas, compute_uv=False)
    bad = np.where(sv.min(axis=-1) <= SIGMA_MIN_SV)[0]
    if bad.size:
        raise SingularCoefficientError(
            f"sigma is numerically singular at t={times[bad[0]]:.6g} "
            f"(smallest singular value {sv[bad[0]].min():.3e})")
    sol = np.linalg.solve(np.swapaxes(sigmas, -1, -2), rows[..., None])
    return sol[..., 0]


def saddle_point(m: MarketModel, f: CoefficientCurve):
    """Saddle strategies (pi*, eta*) sampled on f's grid.

    pi*(t) = -(f/gamma) a Sigma^{-1},  eta*(t) = -lam - (f/gamma) a.
    """
    m.require_valid()
    grid = f.breakpoints
    phi = f.values / m.gamma
    a_vals = m.a.at(grid)
    lam_vals = m.lam.at(grid)
    sig_vals = m.sigma.at(grid)
    a_sig_inv = _row_times_sigma_inv(a_vals, sig_vals, grid)
    pi_vals = -phi[:, None] * a_sig_inv
    eta_vals = -lam_vals - phi[:, None] * a_vals
    return (CoefficientCurve(grid, pi_vals),
            CoefficientCurve(grid, eta_vals))


def solve(m: MarketModel, nodes: int = DEFAULT_NODES) -> SolutionPair:
    """Full solution: f, g and the saddle strategies."""
    f = solve_f(m, nodes)
    g = solve_g(m, f, nodes)
    pi_star, eta_star = saddle_point(m, f)
    return SolutionPair(f=f, g=g, pi_star=pi_star, eta_star=eta_star,
                        quadrature_nodes=nodes)


def value_function(m: MarketModel, sol: SolutionPair, s: StatePoint) -> float:
    """V(x, r, t) = (x^gamma / gamma) exp(f(t) r + g(t)); positive for x > 0."""
    if not s.x > 0:
        raise ValueError(f"wealth must be positive, got {s.x}")
    if not 0.0 <= s.t <= m.horizon:
        raise ValueError(f"t={s.t} outside [0, {m.horizon}]")
    return (s.x**m.gamma / m.gamma) * float(
        np.exp(sol.f.at(s.t) * s.r + sol.g.at(s.t)))


def value_query(m: MarketModel, sol: SolutionPair, s: StatePoint) -> ValueQuery:
    return ValueQuery(state=s, value=value_function(m, sol, s))


def martingale_gap(m: MarketModel, eta: CoefficientCurve, t) -> np.ndarray:
    """Excess drift of the discounted assets under the measure tilted by eta.

    Returns Sigma_t (lam_t + eta_t)^T as an n-vector; it vanishes exactly
    when the tilted measure is a martingale measure at time t (eta = -lam),
    and equals -(f/gamma) Sigma a^T under the worst-case kernel.
    """
    sig = m.sigma.at(t)
    total = m.lam.at(t) + eta.at(t)
    return sig @ total


def merton_portfolio(lam_vals: np.ndarray, eta_vals: np.ndarray,
                     f_vals: np.ndarray, a_vals: np.ndarray,
                     sig_vals: np.ndarray, gamma: float,
                     times: np.ndarray) -> np.ndarray:
    """(1/(1-gamma)) (lam + eta + f a) Sigma^{-1} for stacked samples.

    The best-response portfolio to a fixed drift kernel eta; shared by the
    traditional (eta = 0) and the constrained solutions so that coinciding
    cases agree bit-for-bit.
    """
    rows = lam_vals + eta_vals + f_vals[:, None] * a_vals
    return _row_times_sigma_inv(rows, sig_vals, times) / (1.0 - gamma)


def traditional_strategy(m: MarketModel, f: CoefficientCurve) -> CoefficientCurve:
    """Non-robust optimal portfolio (1/(1-gamma))(lam + f a) Sigma^{-1}."""
    m.require_valid()
    grid = f.breakpoints
    lam_vals = m.lam.at(grid)
    pi_vals = merton_portfolio(lam_vals, np.zeros_like(lam_vals), f.values,
                               m.a.at(grid), m.sigma.at(grid), m.gamma, grid)
    return CoefficientCurve(grid, pi_vals)

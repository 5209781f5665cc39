"""Game Hamiltonian and pointwise saddle certification.

Dividing the dynamic-programming operator applied to the candidate
V = (x^gamma/gamma) e^{f r + g} by V leaves the reduced Hamiltonian

    H(pi, eta; r, t) = f' r + g' + 1/2 |a|^2 f^2
                       + 1/2 gamma (gamma-1) pi Sigma Sigma^T pi^T
                       + gamma f (pi Sigma) a^T
                       + gamma (pi Sigma)(lam + eta)^T + f eta a^T
                       + (b - kappa r) f + gamma r,

which is strictly concave in pi (gamma(gamma-1) < 0) and affine in eta.
The saddle property

    H(pi, eta*) <= H(pi*, eta*) = 0 <= H(pi*, eta)

is certified on finite grids of (t, r) states and strategy perturbations.
A grid can only probe a compact box, but together with the affinity and
concavity checks in the test suite it is the strongest finite verification
available; the residual gap to "all real pi, eta" is structural, not
numerical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import closedform
from .closedform import SolutionPair
from .model import MarketModel, StatePoint

INEQUALITY_TOL = 1e-9   # admissible saddle-inequality slack
SADDLE_VALUE_TOL = 1e-8  # admissible |H| at the claimed saddle


@dataclass(frozen=True)
class HQuery:
    """Arguments of the reduced Hamiltonian: strategies and state."""

    pi: np.ndarray
    eta: np.ndarray
    r: float
    t: float

    def __post_init__(self):
        object.__setattr__(self, "pi", np.atleast_1d(np.asarray(self.pi, float)))
        object.__setattr__(self, "eta", np.atleast_1d(np.asarray(self.eta, float)))


@dataclass(frozen=True)
class GridSpec:
    """Certification grid: time/rate points and strategy perturbation boxes."""

    t_points: int = 21
    r_points: int = 21
    pi_points: int = 21
    eta_points: int = 21
    r_lo: float = -0.05
    r_hi: float = 0.15
    pi_halfwidth: float = 5.0
    eta_halfwidth: float = 5.0


@dataclass(frozen=True)
class SaddleCertificate:
    """Grid-certification outcome.

    max_violation_upper : max over (t, r, pi) of H(pi, eta~) - H(pi~, eta~)
    max_violation_lower : max over (t, r, eta) of H(pi~, eta~) - H(pi~, eta)
    h_at_saddle_max_abs : max over (t, r) of |H(pi~, eta~)|

    where (pi~, eta~) is the solution pair under test.  At the true saddle
    both violations reduce to the absolute inequalities because H there is
    zero.  passed iff violations <= 1e-9 and |H| at the saddle <= 1e-8.
    """

    grid_spec: tuple
    max_violation_upper: float
    max_violation_lower: float
    h_at_saddle_max_abs: float
    passed: bool
    degenerate: bool = False
    worst: dict = field(default_factory=dict)


def _fg_at(m: MarketModel, sol: SolutionPair, t: float, mode: str):
    """f(t), f'(t), g'(t) and a one-sided-difference flag.

    mode "exact" uses the defining equations for the derivatives, decoupling
    certification from quadrature error; "difference" uses central
    differences at the solved grid's spacing (one-sided at the boundaries).
    """
    f_t = float(sol.f.at(t))
    if mode == "exact":
        return f_t, float(closedform.f_prime(m, sol.f, t)), \
            float(closedform.g_prime(m, sol.f, t)), False
    if mode != "difference":
        raise ValueError(f"unknown derivative mode {mode!r}")
    grid = sol.f.breakpoints
    h = float(grid[1] - grid[0])
    horizon = float(grid[-1])
    onesided = False

    def deriv(curve):
        nonlocal onesided
        if t - h >= 0.0 and t + h <= horizon:
            return (float(curve.at(t + h)) - float(curve.at(t - h))) / (2 * h)
        onesided = True
        if t - h < 0.0:
            return (-3 * float(curve.at(t)) + 4 * float(curve.at(t + h))
                    - float(curve.at(t + 2 * h))) / (2 * h)
        return (3 * float(curve.at(t)) - 4 * float(curve.at(t - h))
                + float(curve.at(t - 2 * h))) / (2 * h)

    return f_t, deriv(sol.f), deriv(sol.g), onesided


def _strategy_core(P: np.ndarray, E: np.ndarray, f_t: float, a_t: np.ndarray,
                   lam_t: np.ndarray, sig_t: np.ndarray,
                   gamma: float) -> np.ndarray:
    """Strategy-dependent part of H for stacked pi rows P and eta rows E.

    Returns shape (len(P), len(E)); state-dependent terms are excluded.
    """
    v = P @ sig_t
    quad = 0.5 * gamma * (gamma - 1.0) * np.sum(v * v, axis=1)
    pi_only = quad + gamma * f_t * (v @ a_t) + gamma * (v @ lam_t)
    cross = gamma * (v @ E.T)
    eta_only = f_t * (E @ a_t)
    return pi_only[:, None] + cross + eta_only[None, :]


def h_value(m: MarketModel, sol: SolutionPair, q: HQuery,
            mode: str = "exact", return_info: bool = False):
    """Reduced Hamiltonian at (pi, eta, r, t)."""
    f_t, fp, gp, onesided = _fg_at(m, sol, q.t, mode)
    a_t = m.a.at(q.t)
    lam_t = m.lam.at(q.t)
    sig_t = m.sigma.at(q.t)
    b_t = float(m.b.at(q.t))
    kap_t = float(m.kappa.at(q.t))
    core = _strategy_core(q.pi[None, :], q.eta[None, :], f_t, a_t, lam_t,
                          sig_t, m.gamma)[0, 0]
    value = (fp * q.r + gp + 0.5 * float(a_t @ a_t) * f_t**2
             + core + (b_t - kap_t * q.r) * f_t + m.gamma * q.r)
    if return_info:
        return value, {"one_sided_time_difference": onesided, "mode": mode}
    return value


def make_value_evaluator(m: MarketModel, sol: SolutionPair):
    """Callable (x, r, t) -> V(x, r, t) for the solved model."""

    def evaluate(x: float, r: float, t: float) -> float:
        return closedform.value_function(m, sol, StatePoint(x=x, r=r, t=t))

    return evaluate


def l_operator(m: MarketModel, value_fn, q: HQuery, x: float) -> float:
    """Dynamic-programming operator applied to an arbitrary value evaluator.

    All partial derivatives are finite differences (dx = 1e-4 x, dr = 1e-5,
    dt = 1e-5; second-order one-sided in time at the horizon boundaries).
    For the exponential-affine candidate this equals V * H to high accuracy.
    """
    if not x > 0:
        raise ValueError("wealth must be positive")
    dx, dr, dt = 1e-4 * x, 1e-5, 1e-5
    r, t = q.r, q.t
    horizon = m.horizon

    v00 = value_fn(x, r, t)
    if t - dt >= 0.0 and t + dt <= horizon:
        v_t = (value_fn(x, r, t + dt) - value_fn(x, r, t - dt)) / (2 * dt)
    elif t + dt > horizon:
        v_t = (3 * v00 - 4 * value_fn(x, r, t - dt)
               + value_fn(x, r, t - 2 * dt)) / (2 * dt)
    else:
        v_t = (-3 * v00 + 4 * value_fn(x, r, t + dt)
               - value_fn(x, r, t + 2 * dt)) / (2 * dt)

    vxp, vxm = value_fn(x + dx, r, t), value_fn(x - dx, r, t)
    vrp, vrm = value_fn(x, r + dr, t), value_fn(x, r - dr, t)
    v_x = (vxp - vxm) / (2 * dx)
    v_xx = (vxp - 2 * v00 + vxm) / dx**2
    v_r = (vrp - vrm) / (2 * dr)
    v_rr = (vrp - 2 * v00 + vrm) / dr**2
    v_xr = (value_fn(x + dx, r + dr, t) - value_fn(x + dx, r - dr, t)
            - value_fn(x - dx, r + dr, t) + value_fn(x - dx, r - dr, t)
            ) / (4 * dx * dr)

    a_t = m.a.at(t)
    lam_t = m.lam.at(t)
    sig_t = m.sigma.at(t)
    b_t = float(m.b.at(t))
    kap_t = float(m.kappa.at(t))
    v_row = q.pi @ sig_t
    return (v_t + 0.5 * float(a_t @ a_t) * v_rr
            + 0.5 * float(v_row @ v_row) * x**2 * v_xx
            + float(v_row @ a_t) * x * v_xr
            + float(v_row @ (lam_t + q.eta)) * x * v_x
            + float(q.eta @ a_t) * v_r
            + (b_t - kap_t * r) * v_r + r * x * v_x)


def offset_vectors(n: int, offsets: np.ndarray) -> np.ndarray:
    """Strategy perturbation directions for an n-asset model.

    Full cartesian product of per-axis offsets for n <= 2; axis-aligned
    sweeps (plus the origin) for larger n, where the product grid would
    explode combinatorially.
    """
    offsets = np.asarray(offsets, dtype=float)
    if n == 1:
        return offsets[:, None]
    if n == 2:
        g0, g1 = np.meshgrid(offsets, offsets, indexing="ij")
        return np.column_stack([g0.ravel(), g1.ravel()])
    rows = [np.zeros(n)]
    for axis in range(n):
        for off in offsets:
            if off != 0.0:
                e = np.zeros(n)
                e[axis] = off
                rows.append(e)
    return np.array(rows)


def certify_saddle(m: MarketModel, sol: SolutionPair,
                   grid: GridSpec | None = None,
                   mode: str = "exact") -> SaddleCertificate:
    """Certify the saddle inequalities for sol's strategy pair on a grid.

    The time grid covers [0, T) (T excluded: perturbations there are
    indistinguishable since f(T) = 0 kills every strategy term), rates span
    [r_lo, r_hi], and strategies are perturbed in boxes of the configured
    half-width around the pair under test.  The analytic best response to
    the pair's kernel, (1/(1-gamma))(lam + eta + f a) Sigma^{-1}, is
    appended to the pi scan: H is concave in pi with its maximum there, so
    a maximality violation by the claimed pair is detected exactly rather
    than up to grid resolution.
    """
    m.require_valid()
    grid = grid or GridSpec()
    horizon = m.horizon
    t_grid = np.linspace(0.0, horizon, grid.t_points + 1)[:-1]
    r_grid = np.linspace(grid.r_lo, grid.r_hi, grid.r_points)
    pi_off = offset_vectors(m.n, np.linspace(-grid.pi_halfwidth,
                                             grid.pi_halfwidth, grid.pi_points))
    eta_off = offset_vectors(m.n, np.linspace(-grid.eta_halfwidth,
                                              grid.eta_halfwidth, grid.eta_points))

    worst_upper = (-np.inf, None)
    worst_lower = (-np.inf, None)
    worst_sad = (-np.inf, None)
    for t in t_grid:
        f_t, fp, gp, _ = _fg_at(m, sol, float(t), mode)
        a_t = m.a.at(t)
        lam_t = m.lam.at(t)
        sig_t = m.sigma.at(t)
        b_t = float(m.b.at(t))
        kap_t = float(m.kappa.at(t))
        pi_t = np.atleast_1d(sol.pi_star.at(t))
        eta_t = np.atleast_1d(sol.eta_star.at(t))

        core_saddle = _strategy_core(pi_t[None, :], eta_t[None, :], f_t, a_t,
                                     lam_t, sig_t, m.gamma)[0, 0]
        best_response = closedform.merton_portfolio(
            lam_t[None, :], eta_t[None, :], np.array([f_t]), a_t[None, :],
            sig_t[None, :, :], m.gamma, np.array([t]))
        pi_scan = np.vstack([pi_t[None, :] + pi_off, best_response])
        core_pi = _strategy_core(pi_scan, eta_t[None, :], f_t,
                                 a_t, lam_t, sig_t, m.gamma)[:, 0]
        core_eta = _strategy_core(pi_t[None, :], eta_t[None, :] + eta_off, f_t,
                                  a_t, lam_t, sig_t, m.gamma)[0, :]

        # the state terms cancel in the saddle-relative differences, so the
        # violations are constant across the r grid
        up = core_pi.max() - core_saddle
        if up > worst_upper[0]:
            arg = int(core_pi.argmax())
            offender = (pi_off[arg].tolist() if arg < len(pi_off)
                        else (best_response[0] - pi_t).tolist())
            worst_upper = (up, {"t": float(t), "pi_offset": offender})
        low = core_saddle - core_eta.min()
        if low > worst_lower[0]:
            worst_lower = (low, {"t": float(t),
                                 "eta_offset": eta_off[int(core_eta.argmin())].tolist()})

        base = (fp * r_grid + gp + 0.5 * float(a_t @ a_t) * f_t**2
                + (b_t - kap_t * r_grid) * f_t + m.gamma * r_grid)
        h_sad = np.abs(base + core_saddle)
        if h_sad.max() > worst_sad[0]:
            worst_sad = (float(h_sad.max()),
                         {"t": float(t), "r": float(r_grid[int(h_sad.argmax())])})

    passed = (worst_upper[0] <= INEQUALITY_TOL
              and worst_lower[0] <= INEQUALITY_TOL
              and worst_sad[0] <= SADDLE_VALUE_TOL)
    return SaddleCertificate(
        grid_spec=(grid.t_points, grid.r_points, grid.pi_points,
                   grid.eta_points),
        max_violation_upper=float(worst_upper[0]),
        max_violation_lower=float(worst_lower[0]),
        h_at_saddle_max_abs=float(worst_sad[0]),
        passed=bool(passed),
        degenerate=m.rate_noise_off,
        worst={"upper": worst_upper[1], "lower": worst_lower[1],
               "h_at_saddle": worst_sad[1]},
    )

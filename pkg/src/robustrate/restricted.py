"""Worst-case game with the drift kernel confined to a compact convex set.

With eta restricted to Gamma, maximizing the Hamiltonian over pi first
leaves a pointwise minimization over Gamma of the convex quadratic

    M(eta) = 1/2 * gamma/(1-gamma) * |lam + eta + f a|^2  +  f eta a^T,

whose Hessian is gamma/(1-gamma) times the identity.  Because the quadratic
part is isotropic, the constrained minimizer is the Euclidean projection of
the unconstrained stationary point

    eta_u = -lam - (f/gamma) a

onto Gamma: coordinatewise clamping for boxes, radial shrinking for balls.
A projected-gradient solver is kept as the general route and cross-check.
The constrained saddle is completed by the best response

    pi*(t) = (1/(1-gamma)) (lam + eta* + f a) Sigma^{-1},

and the g-equation becomes g' + 1/2 |a|^2 f^2 + b f + min_Gamma M = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .closedform import merton_portfolio
from .curves import CoefficientCurve
from .model import MarketModel
from .quadrature import cumulative_simpson

PGD_TOL = 1e-12
PGD_MAX_ITER = 10_000
MEMBERSHIP_TOL = 1e-10
ISAACS_TOL = 1e-6


@dataclass(frozen=True)
class GammaSet:
    """Compact convex constraint set for the drift kernel: box or ball."""

    shape: str
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    center: np.ndarray | None = None
    radius: float | None = None

    @classmethod
    def box(cls, lo, hi) -> "GammaSet":
        lo = np.atleast_1d(np.asarray(lo, float))
        hi = np.atleast_1d(np.asarray(hi, float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box needs lo <= hi componentwise")
        return cls(shape="box", lo=lo, hi=hi)

    @classmethod
    def ball(cls, center, radius: float) -> "GammaSet":
        center = np.atleast_1d(np.asarray(center, float))
        if radius < 0:
            raise ValueError("ball radius must be >= 0")
        return cls(shape="ball", center=center, radius=float(radius))

    @property
    def dimension(self) -> int:
        return int((self.lo if self.shape == "box" else self.center).shape[0])

    def project(self, eta: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the set."""
        eta = np.asarray(eta, float)
        if self.shape == "box":
            return np.clip(eta, self.lo, self.hi)
        delta = eta - self.center
        norm = float(np.linalg.norm(delta))
        if norm <= self.radius:
            return eta.copy()
        if norm == 0.0:
            return self.center.copy()
        return self.center + delta * (self.radius / norm)

    def distance(self, eta: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(eta, float) - self.project(eta)))

    def contains(self, eta: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.distance(eta) <= tol

    def grid(self, points_per_axis: int) -> np.ndarray:
        """Uniform grid covering the set, shape (k, n).

        Boxes get the full per-axis product (n <= 2); balls get the interval
        (n = 1) or a masked product over the bounding box (n = 2).  Higher
        dimensions are not gridded; use sample() there.
        """
        n = self.dimension
        if n > 2:
            raise ValueError("grids limited to n <= 2; use sample() instead")
        if self.shape == "box":
            axes = [np.linspace(self.lo[i], self.hi[i], points_per_axis)
                    for i in range(n)]
        else:
            axes = [np.linspace(self.center[i] - self.radius,
                                self.center[i] + self.radius, points_per_axis)
                    for i in range(n)]
        if n == 1:
            pts = axes[0][:, None]
        else:
            g0, g1 = np.meshgrid(axes[0], axes[1], indexing="ij")
            pts = np.column_stack([g0.ravel(), g1.ravel()])
        if self.shape == "ball" and n == 2:
            keep = np.linalg.norm(pts - self.center, axis=1) <= self.radius
            pts = pts[keep]
        return pts

    def sample(self, count: int, seed: int = 0) -> np.ndarray:
        """Random points in the set (used for n >= 3, where grids explode;
        the resulting Isaacs check is correspondingly weaker)."""
        rng = np.random.default_rng(seed)
        n = self.dimension
        if self.shape == "box":
            return rng.uniform(self.lo, self.hi, size=(count, n))
        direction = rng.standard_normal((count, n))
        direction /= np.maximum(np.linalg.norm(direction, axis=1,
                                               keepdims=True), 1e-300)
        radii = self.radius * rng.uniform(0.0, 1.0, count) ** (1.0 / n)
        return self.center + direction * radii[:, None]


@dataclass(frozen=True)
class RestrictedSolution:
    """Constrained saddle point sampled on f's grid."""

    eta_star: CoefficientCurve
    pi_star: CoefficientCurve
    objective: CoefficientCurve     # minimized M value per grid time
    active: np.ndarray              # True where the constraint binds


@dataclass(frozen=True)
class IsaacsReport:
    """Grid check of min_Gamma max_pi H == max_pi min_Gamma H == 0."""

    max_abs_gap: float
    max_abs_value: float
    eta_points: int
    pi_points: int
    t_points: int
    r_points: int
    passed: bool


def _coeffs_at(m: MarketModel, f: CoefficientCurve, t):
    f_t = f.at(t)
    return f_t, m.lam.at(t), m.a.at(t)


def _central(curve: CoefficientCurve, t: float, h: float,
             horizon: float) -> float:
    """Central difference at grid spacing, one-sided at the boundaries."""
    if t - h >= 0.0 and t + h <= horizon:
        return (float(curve.at(t + h)) - float(curve.at(t - h))) / (2 * h)
    if t - h < 0.0:
        return (-3 * float(curve.at(t)) + 4 * float(curve.at(t + h))
                - float(curve.at(t + 2 * h))) / (2 * h)
    return (3 * float(curve.at(t)) - 4 * float(curve.at(t - h))
            + float(curve.at(t - 2 * h))) / (2 * h)


def eta_objective(m: MarketModel, f: CoefficientCurve, t: float,
                  eta) -> float:
    """Pointwise objective minimized by the worst-case kernel over Gamma."""
    f_t, lam_t, a_t = _coeffs_at(m, f, t)
    eta = np.atleast_1d(np.asarray(eta, float))
    w = lam_t + eta + f_t * a_t
    k = m.gamma / (1.0 - m.gamma)
    return float(0.5 * k * (w @ w) + f_t * (eta @ a_t))


def eta_objective_gradient(m: MarketModel, f: CoefficientCurve, t: float,
                           eta) -> np.ndarray:
    f_t, lam_t, a_t = _coeffs_at(m, f, t)
    eta = np.atleast_1d(np.asarray(eta, float))
    k = m.gamma / (1.0 - m.gamma)
    return k * (lam_t + eta + f_t * a_t) + f_t * a_t


def unconstrained_minimizer(m: MarketModel, f: CoefficientCurve,
                            t: float) -> np.ndarray:
    """Stationary point of the objective: -lam - (f/gamma) a."""
    f_t, lam_t, a_t = _coeffs_at(m, f, t)
    return -lam_t - (f_t / m.gamma) * a_t


def minimize_eta(m: MarketModel, f: CoefficientCurve, t: float,
                 gamma_set: GammaSet, method: str = "projection"
                 ) -> np.ndarray:
    """Minimizer of eta_objective over Gamma.

    "projection" exploits the isotropic quadratic part (exact);
    "pgd" is plain projected gradient with step (1-gamma)/gamma, kept as the
    structure-free route and used by the tests to cross-check the projection.
    """
    if method == "projection":
        return gamma_set.project(unconstrained_minimizer(m, f, t))
    if method != "pgd":
        raise ValueError(f"unknown method {method!r}")
    lipschitz = m.gamma / (1.0 - m.gamma)
    eta = gamma_set.project(np.zeros(gamma_set.dimension))
    for _ in range(PGD_MAX_ITER):
        grad = eta_objective_gradient(m, f, t, eta)
        nxt = gamma_set.project(eta - grad / lipschitz)
        if np.linalg.norm(nxt - eta) <= PGD_TOL:
            return nxt
        eta = nxt
    return eta


def restricted_saddle(m: MarketModel, f: CoefficientCurve,
                      gamma_set: GammaSet) -> RestrictedSolution:
    """Constrained saddle (pi*, eta*) on f's grid.

    eta* is the pointwise Gamma-minimizer; pi* the Merton-type best response
    (1/(1-gamma))(lam + eta* + f a) Sigma^{-1}.
    """
    m.require_valid()
    if gamma_set.dimension != m.n:
        raise ValueError("Gamma dimension must match the asset count")
    grid = f.breakpoints
    f_vals = f.values
    lam_vals = m.lam.at(grid)
    a_vals = m.a.at(grid)
    uncon = -lam_vals - (f_vals[:, None] / m.gamma) * a_vals
    eta_vals = np.array([gamma_set.project(row) for row in uncon])
    active = np.linalg.norm(eta_vals - uncon, axis=1) > MEMBERSHIP_TOL

    k = m.gamma / (1.0 - m.gamma)
    w = lam_vals + eta_vals + f_vals[:, None] * a_vals
    objective = (0.5 * k * np.sum(w * w, axis=1)
                 + f_vals * np.sum(eta_vals * a_vals, axis=1))

    pi_vals = merton_portfolio(lam_vals, eta_vals, f_vals, a_vals,
                               m.sigma.at(grid), m.gamma, grid)
    return RestrictedSolution(
        eta_star=CoefficientCurve(grid, eta_vals),
        pi_star=CoefficientCurve(grid, pi_vals),
        objective=CoefficientCurve(grid, objective),
        active=active,
    )


def restricted_g(m: MarketModel, f: CoefficientCurve, gamma_set: GammaSet,
                 nodes: int | None = None) -> CoefficientCurve:
    """g for the constrained game: g(T) = 0 and
    g(t) = int_t^T [ 1/2 |a|^2 f^2 + b f + min_Gamma M ] ds, with the
    minimizer evaluated at every quadrature node."""
    m.require_valid()
    grid = f.breakpoints
    if nodes is not None and grid.size != nodes + 1:
        raise ValueError("f must be sampled on the requested grid")
    h = grid[1] - grid[0]
    sol = restricted_saddle(m, f, gamma_set)
    a_vals = m.a.at(grid)
    integrand = (0.5 * np.sum(a_vals * a_vals, axis=1) * f.values**2
                 + m.b.at(grid) * f.values + sol.objective.values)
    running = cumulative_simpson(integrand, h)
    return CoefficientCurve(grid, running[-1] - running)


def restricted_g_prime(m: MarketModel, f: CoefficientCurve,
                       gamma_set: GammaSet, t: float) -> float:
    """Exact derivative of the constrained g at t."""
    f_t, _, a_t = _coeffs_at(m, f, t)
    eta_t = minimize_eta(m, f, t, gamma_set)
    return -float(0.5 * (a_t @ a_t) * f_t**2 + m.b.at(t) * f_t
                  + eta_objective(m, f, t, eta_t))


def check_isaacs_equality(m: MarketModel, f: CoefficientCurve,
                          g_restricted: CoefficientCurve,
                          gamma_set: GammaSet,
                          eta_points: int = 101, pi_points: int = 101,
                          t_points: int = 21, r_points: int = 21,
                          r_lo: float = -0.05, r_hi: float = 0.15,
                          pi_halfwidth: float = 5.0,
                          include_saddle_pi: bool = True,
                          mode: str = "exact",
                          tol: float = ISAACS_TOL) -> IsaacsReport:
    """Compare min-max and max-min of H over strategy grids at each (r, t).

    eta_points is per axis; the eta grid spans Gamma (with the analytic
    minimizer appended so the grid game is sharp) and the pi grid is
    centered on the constrained best response.  include_saddle_pi=False
    shifts the pi grid off the saddle by half a spacing -- the negative
    control, which must report a nonzero value for the grid game.  For
    n >= 3 the Gamma grid is replaced by random samples, a documented
    weaker guarantee.  mode "exact" derives f', g' from their equations;
    "difference" differentiates the solved f and g_restricted curves.
    """
    m.require_valid()
    horizon = m.horizon
    t_grid = np.linspace(0.0, horizon, t_points + 1)[:-1]
    r_grid = np.linspace(r_lo, r_hi, r_points)
    offsets = np.linspace(-pi_halfwidth, pi_halfwidth, pi_points)
    if not include_saddle_pi:
        offsets = offsets + 0.5 * (offsets[1] - offsets[0])

    if m.n <= 2:
        eta_base = gamma_set.grid(eta_points)
    else:
        eta_base = gamma_set.sample(10_000, seed=0)

    from .hjbi import offset_vectors  # local import to avoid a module cycle
    pi_offsets = offset_vectors(m.n, offsets)
    grid_h = float(f.breakpoints[1] - f.breakpoints[0])

    max_gap = 0.0
    max_value = 0.0
    for t in t_grid:
        f_t = float(f.at(t))
        lam_t = m.lam.at(t)
        a_t = m.a.at(t)
        sig_t = m.sigma.at(t)
        b_t = float(m.b.at(t))
        kap_t = float(m.kappa.at(t))
        eta_star = minimize_eta(m, f, float(t), gamma_set)
        if mode == "exact":
            fp_t = kap_t * f_t - m.gamma
            gp_t = restricted_g_prime(m, f, gamma_set, float(t))
        else:
            fp_t = _central(f, float(t), grid_h, horizon)
            gp_t = _central(g_restricted, float(t), grid_h, horizon)

        pi_star = merton_portfolio(lam_t[None, :], eta_star[None, :],
                                   np.array([f_t]), a_t[None, :],
                                   sig_t[None, :, :], m.gamma,
                                   np.array([t]))[0]
        etas = np.vstack([eta_base, eta_star[None, :]])
        pis = pi_star[None, :] + pi_offsets

        v = pis @ sig_t
        quad = 0.5 * m.gamma * (m.gamma - 1.0) * np.sum(v * v, axis=1)
        pi_part = quad + m.gamma * f_t * (v @ a_t) + m.gamma * (v @ lam_t)
        cross = m.gamma * (v @ etas.T)
        eta_part = f_t * (etas @ a_t)
        core = pi_part[:, None] + cross + eta_part[None, :]

        minmax = core.max(axis=0).min()
        maxmin = core.min(axis=1).max()
        max_gap = max(max_gap, abs(minmax - maxmin))
        base = (fp_t * r_grid + gp_t + 0.5 * float(a_t @ a_t) * f_t**2
                + (b_t - kap_t * r_grid) * f_t + m.gamma * r_grid)
        max_value = max(max_value, float(np.abs(base + minmax).max()))

    return IsaacsReport(max_abs_gap=float(max_gap),
                        max_abs_value=float(max_value),
                        eta_points=eta_points, pi_points=pi_points,
                        t_points=t_points, r_points=r_points,
                        passed=bool(max_gap < tol and max_value < tol))

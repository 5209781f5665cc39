"""Market model: bank account, n risky assets, mean-reverting short rate.

Reference-measure dynamics:

    dB = r B dt
    dS = diag(S) [(r e + Sigma lam^T) dt + Sigma dW]
    dr = (b - kappa r) dt + a dW

with time-dependent deterministic coefficients kappa, b (scalars), lam, a
(row n-vectors) and an invertible volatility matrix Sigma (n x n).  The cross
drift a lam^T dt is assumed to be folded into b by the caller; this module
never mutates coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import CoefficientCurve
from .errors import DegenerateParameterError, InvalidModelError

SIGMA_MIN_SV = 1e-10  # smallest admissible singular value of Sigma_t


@dataclass(frozen=True)
class StatePoint:
    """System state (x, r, t): wealth, short rate, time."""

    x: float
    r: float
    t: float

    def __post_init__(self):
        if not self.x > 0:
            raise ValueError(f"wealth must be positive, got {self.x}")
        if self.t < 0:
            raise ValueError(f"time must be nonnegative, got {self.t}")


@dataclass(frozen=True)
class Violation:
    """One broken model invariant: where it is and what is wrong."""

    location: str
    message: str

    def __str__(self):
        return f"{self.location}: {self.message}"


@dataclass(frozen=True)
class MarketModel:
    """Problem instance: dimension, horizon, risk aversion, coefficient curves.

    Construction is permissive; run validate_model / require_valid to check
    invariants (solvers do this on entry).  Immutable, safe to share.
    """

    n: int
    horizon: float
    gamma: float
    kappa: CoefficientCurve
    b: CoefficientCurve
    lam: CoefficientCurve
    a: CoefficientCurve
    sigma: CoefficientCurve

    def require_valid(self) -> "MarketModel":
        violations = validate_model(self)
        if violations:
            raise InvalidModelError(violations)
        return self

    @property
    def rate_noise_off(self) -> bool:
        """True when a == 0 identically (deterministic-rate limit)."""
        return bool(np.all(self.a.values == 0.0))


def _check_curve(out, name, curve, horizon, dims):
    if not isinstance(curve, CoefficientCurve):
        out.append(Violation(name, "not a CoefficientCurve"))
        return False
    if abs(curve.horizon - horizon) > 1e-12 * max(1.0, abs(horizon)):
        out.append(Violation(
            name, f"curve horizon {curve.horizon} != model horizon {horizon}"))
    if curve.values.ndim != len(dims) + 1 or (
            dims and curve.values.shape[1:] != dims):
        want = "scalar" if not dims else f"shape {dims}"
        out.append(Violation(
            name, f"expected {want} values, got shape {curve.values.shape[1:]}"))
        return False
    return True


def validate_model(m: MarketModel) -> list[Violation]:
    """Every violated invariant, with its location; empty list means valid."""
    out: list[Violation] = []
    if not isinstance(m.n, (int, np.integer)) or m.n < 1:
        out.append(Violation("n", f"asset count must be a positive integer, got {m.n}"))
        return out
    if not m.horizon > 0:
        out.append(Violation("horizon", f"must be positive, got {m.horizon}"))
    if not 0.0 < m.gamma < 1.0:
        out.append(Violation(
            "gamma", f"risk aversion must lie in the open interval (0, 1), got {m.gamma}"))
    n = int(m.n)
    _check_curve(out, "kappa", m.kappa, m.horizon, ())
    _check_curve(out, "b", m.b, m.horizon, ())
    _check_curve(out, "lambda", m.lam, m.horizon, (n,))
    _check_curve(out, "a", m.a, m.horizon, (n,))
    if _check_curve(out, "sigma", m.sigma, m.horizon, (n, n)):
        sv = np.linalg.svd(m.sigma.values, compute_uv=False)
        for i, smin in enumerate(sv.min(axis=-1)):
            if not smin > SIGMA_MIN_SV:
                out.append(Violation(
                    f"sigma[{i}]",
                    f"not invertible at t={m.sigma.breakpoints[i]}: "
                    f"smallest singular value {smin:.3e} <= {SIGMA_MIN_SV}"))
    return out


def bond_volatility(kappa: float, a_level: float, maturity: float, t):
    """Zero-coupon bond volatility -(a/kappa) (1 - exp(-kappa (T' - t)))."""
    if kappa == 0.0:
        raise DegenerateParameterError(
            "kappa must be nonzero in the bond volatility formula; "
            "for the kappa->0 limit supply -a*(maturity - t) directly")
    t = np.asarray(t, dtype=float)
    return -(a_level / kappa) * (1.0 - np.exp(-kappa * (maturity - t)))


def bond_volatility_curve(kappa: float, a_level: float, maturity: float,
                          grid) -> CoefficientCurve:
    """Scalar curve of the bond volatility sampled on `grid`.

    Used to assemble the mixed stock/bond configuration, where the second
    asset is a zero-coupon bond maturing at `maturity` (past the investment
    horizon, i.e. maturity > grid[-1]).
    """
    grid = np.asarray(grid, dtype=float)
    if grid[-1] >= maturity:
        raise ValueError("bond maturity must exceed the sampling horizon")
    return CoefficientCurve(grid, bond_volatility(kappa, a_level, maturity, grid))

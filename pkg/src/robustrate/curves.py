"""Deterministic time-dependent coefficients on [0, T].

A CoefficientCurve stores samples (scalar, length-n vector, or n x n matrix
per breakpoint) and interpolates between them, either piecewise-linearly or
as a left-continuous step function.  All model coefficients (mean-reversion
speed, rate drift, market price of risk, rate volatility loadings, asset
volatility matrix) are curves, as are the solved strategy functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import CurveDomainError

PIECEWISE_LINEAR = "piecewise-linear"
PIECEWISE_CONSTANT_LEFT = "piecewise-constant-left"

_ALIASES = {
    "linear": PIECEWISE_LINEAR,
    PIECEWISE_LINEAR: PIECEWISE_LINEAR,
    "constant-left": PIECEWISE_CONSTANT_LEFT,
    PIECEWISE_CONSTANT_LEFT: PIECEWISE_CONSTANT_LEFT,
}

# slack for "is t inside [0, T]" checks; queries this close to the boundary
# are clamped rather than rejected
_DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class CoefficientCurve:
    """Sampled deterministic function of time on [0, T].

    breakpoints : strictly increasing times, first exactly 0.0
    values      : array of shape (m,), (m, n) or (m, n, n)
    interpolation : "piecewise-linear" (default) or "piecewise-constant-left"
    """

    breakpoints: np.ndarray
    values: np.ndarray
    interpolation: str = PIECEWISE_LINEAR

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("breakpoints must be a 1-D array with >= 2 entries")
        if bp[0] != 0.0:
            raise ValueError(f"first breakpoint must be 0.0, got {bp[0]}")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if vals.shape[0] != bp.size:
            raise ValueError("one value per breakpoint required")
        if vals.ndim not in (1, 2, 3):
            raise ValueError("values must be scalar, vector or matrix samples")
        if vals.ndim == 3 and vals.shape[1] != vals.shape[2]:
            raise ValueError("matrix values must be square")
        if not np.all(np.isfinite(vals)):
            raise ValueError("curve values must be finite")
        kind = _ALIASES.get(self.interpolation)
        if kind is None:
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        object.__setattr__(self, "interpolation", kind)
        self.breakpoints.setflags(write=False)
        self.values.setflags(write=False)

    # -- basic descriptors -------------------------------------------------

    @property
    def horizon(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def dimension(self) -> int | None:
        """n for vector/matrix curves, None for scalar curves."""
        return None if self.values.ndim == 1 else int(self.values.shape[1])

    @property
    def is_scalar(self) -> bool:
        return self.values.ndim == 1

    # -- construction helpers ----------------------------------------------

    @classmethod
    def constant(cls, value, horizon: float,
                 interpolation: str = PIECEWISE_LINEAR) -> "CoefficientCurve":
        """Curve equal to `value` on all of [0, horizon]."""
        v = np.asarray(value, dtype=float)
        return cls(np.array([0.0, float(horizon)]), np.stack([v, v]),
                   interpolation)

    @classmethod
    def from_function(cls, fn, times: Iterable[float],
                      interpolation: str = PIECEWISE_LINEAR) -> "CoefficientCurve":
        times = np.asarray(list(times), dtype=float)
        vals = np.stack([np.asarray(fn(t), dtype=float) for t in times])
        return cls(times, vals, interpolation)

    def shifted(self, delta) -> "CoefficientCurve":
        """New curve with `delta` added to every sample (broadcast)."""
        return CoefficientCurve(self.breakpoints, self.values + delta,
                                self.interpolation)

    # -- evaluation ----------------------------------------------------------

    def at(self, t):
        """Value at time(s) t; exact (bit-identical) at breakpoints.

        Accepts a scalar or an array of times; raises CurveDomainError for
        times outside [0, T].
        """
        tq = np.asarray(t, dtype=float)
        scalar_input = tq.ndim == 0
        tq = np.atleast_1d(tq)
        hi = self.horizon
        if np.any(tq < -_DOMAIN_TOL) or np.any(tq > hi + _DOMAIN_TOL):
            bad = tq[(tq < -_DOMAIN_TOL) | (tq > hi + _DOMAIN_TOL)][0]
            raise CurveDomainError(f"t={bad} outside curve domain [0, {hi}]")
        tq = np.clip(tq, 0.0, hi)
        bp, vals = self.breakpoints, self.values
        if self.interpolation == PIECEWISE_CONSTANT_LEFT:
            idx = np.searchsorted(bp, tq, side="right") - 1
            idx = np.clip(idx, 0, bp.size - 1)
            out = vals[idx]
        else:
            seg = np.searchsorted(bp, tq, side="right") - 1
            seg = np.clip(seg, 0, bp.size - 2)
            t0, t1 = bp[seg], bp[seg + 1]
            w = (tq - t0) / (t1 - t0)
            w = w.reshape(w.shape + (1,) * (vals.ndim - 1))
            # (1-w)*v0 + w*v1 is exact at both segment endpoints
            out = vals[seg] * (1.0 - w) + vals[seg + 1] * w
        return out[0] if scalar_input else out

    def __call__(self, t):
        return self.at(t)

    # -- export ----------------------------------------------------------------

    def to_csv_string(self) -> str:
        """CSV text with a header row; 17 significant digits (round-trip exact)."""
        if self.values.ndim == 1:
            header = "t,value"
            rows = self.values[:, None]
        elif self.values.ndim == 2:
            n = self.values.shape[1]
            header = "t," + ",".join(f"v{i + 1}" for i in range(n))
            rows = self.values
        else:
            n = self.values.shape[1]
            header = "t," + ",".join(f"v{i + 1}_{j + 1}"
                                     for i in range(n) for j in range(n))
            rows = self.values.reshape(self.values.shape[0], -1)
        lines = [header]
        for t, row in zip(self.breakpoints, rows):
            lines.append(",".join(f"{v:.17g}" for v in (t, *row)))
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv_string())


def eval_curve(curve: CoefficientCurve, t):
    """Interpolated value of `curve` at time(s) t."""
    return curve.at(t)


def same_grid(left: CoefficientCurve, right: CoefficientCurve,
              tol: float = 0.0) -> bool:
    """True when both curves share identical breakpoints."""
    if left.breakpoints.size != right.breakpoints.size:
        return False
    if tol == 0.0:
        return bool(np.array_equal(left.breakpoints, right.breakpoints))
    return bool(np.allclose(left.breakpoints, right.breakpoints,
                            rtol=0.0, atol=tol))

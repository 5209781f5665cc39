import numpy as np
import pytest

from robustrate import CoefficientCurve, MarketModel, StatePoint
from robustrate.closedform import solve


def make_model(n=1, horizon=1.0, gamma=0.5, kappa=0.1, b=0.02,
               lam=(0.3,), a=(0.01,), sigma=((0.2,),)):
    return MarketModel(
        n=n, horizon=horizon, gamma=gamma,
        kappa=CoefficientCurve.constant(kappa, horizon),
        b=CoefficientCurve.constant(b, horizon),
        lam=CoefficientCurve.constant(list(lam), horizon),
        a=CoefficientCurve.constant(list(a), horizon),
        sigma=CoefficientCurve.constant([list(row) for row in sigma], horizon),
    )


def make_mixed_stock_bond(gamma=0.5):
    """Two assets: a stock and a zero-coupon bond maturing after the horizon."""
    from robustrate import bond_volatility_curve
    grid = np.linspace(0.0, 1.0, 101)
    bond_vol = bond_volatility_curve(0.1, 0.01, 11.0, grid)
    sig = np.zeros((grid.size, 2, 2))
    sig[:, 0, 0] = 0.25
    sig[:, 0, 1] = 0.05
    sig[:, 1, 1] = bond_vol.values
    return MarketModel(
        n=2, horizon=1.0, gamma=gamma,
        kappa=CoefficientCurve.constant(0.1, 1.0),
        b=CoefficientCurve.constant(0.02, 1.0),
        lam=CoefficientCurve.constant([0.3, 0.2], 1.0),
        a=CoefficientCurve.constant([0.0, 0.01], 1.0),
        sigma=CoefficientCurve(grid, sig),
    )


@pytest.fixture(scope="session")
def reference_model():
    return make_model()


@pytest.fixture(scope="session")
def reference_solution(reference_model):
    return solve(reference_model, 2048)


@pytest.fixture(scope="session")
def reference_state():
    return StatePoint(x=1.0, r=0.03, t=0.0)


# frozen oracles for the reference model (40-digit arithmetic, offline)
F0_REF = 0.47581290982020213418           # f(0) = gamma (1 - e^{-kappa T})/kappa
PHI0_REF = 0.95162581964040426836         # f(0)/gamma
G0_REF = 0.0041040688422424317648         # analytic g(0)
G0_TRAP_REF = 0.0041040688422423607702    # 1e6-node trapezoid oracle
PI0_REF = -0.047581290982020213418        # pi*(0)
ETA0_REF = -0.30951625819640404268        # eta*(0)
TRAD0_REF = 3.0475812909820202134         # traditional strategy at t=0
V0_REF = 2.037096758681952702             # V(1, 0.03, 0)
INT_PHI_REF = 0.48374180359595731642      # int_0^1 f/gamma dt
GAP_EXACT_REF = -0.00096701574582172139   # exp(-Sigma a int phi) - 1

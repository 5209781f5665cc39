import numpy as np
import pytest

from robustrate import CoefficientCurve, CurveDomainError, eval_curve


def test_constant_curve_everywhere():
    c = CoefficientCurve.constant(0.3, 2.0)
    for t in (0.0, 0.5, 1.3, 2.0):
        assert c.at(t) == 0.3


def test_linear_interpolation_midpoint():
    c = CoefficientCurve(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert c.at(0.5) == 0.5


def test_constant_left_holds_left_value():
    c = CoefficientCurve(np.array([0.0, 1.0]), np.array([2.0, 5.0]),
                         "piecewise-constant-left")
    assert c.at(0.99) == 2.0
    assert c.at(0.0) == 2.0
    assert c.at(1.0) == 5.0


def test_breakpoint_evaluation_bit_exact():
    rng = np.random.default_rng(42)
    bp = np.concatenate([[0.0], np.sort(rng.uniform(0.01, 0.99, 7)), [1.0]])
    for vals in (rng.standard_normal(9),
                 rng.standard_normal((9, 3)),
                 rng.standard_normal((9, 2, 2))):
        for kind in ("piecewise-linear", "piecewise-constant-left"):
            c = CoefficientCurve(bp, vals, kind)
            for j, t in enumerate(bp):
                assert np.array_equal(c.at(t), vals[j])


def test_evaluation_deterministic_and_idempotent():
    c = CoefficientCurve(np.array([0.0, 0.4, 1.0]),
                         np.array([1.0, -2.0, 0.5]))
    assert c.at(0.37) == c.at(0.37)


def test_vectorized_evaluation_matches_scalar():
    rng = np.random.default_rng(0)
    c = CoefficientCurve(np.array([0.0, 0.3, 1.0]),
                         rng.standard_normal((3, 2)))
    ts = rng.uniform(0, 1, 20)
    batch = c.at(ts)
    for i, t in enumerate(ts):
        assert np.array_equal(batch[i], c.at(t))


def test_domain_errors():
    c = CoefficientCurve.constant(1.0, 1.0)
    with pytest.raises(CurveDomainError):
        c.at(-0.1)
    with pytest.raises(CurveDomainError):
        c.at(1.1)


def test_eval_curve_function():
    c = CoefficientCurve.constant(2.5, 1.0)
    assert eval_curve(c, 0.7) == 2.5


def test_construction_validation():
    with pytest.raises(ValueError):
        CoefficientCurve(np.array([0.1, 1.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        CoefficientCurve(np.array([0.0, 0.5, 0.5]), np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        CoefficientCurve(np.array([0.0, 1.0]), np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        CoefficientCurve(np.array([0.0, 1.0]), np.array([[1.0, 2.0]]))
    with pytest.raises(ValueError):
        CoefficientCurve(np.array([0.0, 1.0]), np.array([1.0, 2.0]), "cubic")


def test_shifted():
    c = CoefficientCurve(np.array([0.0, 1.0]), np.array([[1.0, 2.0],
                                                         [3.0, 4.0]]))
    s = c.shifted(0.5)
    assert np.array_equal(s.values, c.values + 0.5)
    s2 = c.shifted(np.array([1.0, -1.0]))
    assert np.array_equal(s2.at(0.0), np.array([2.0, 1.0]))


def test_csv_round_trip_17_digits():
    rng = np.random.default_rng(7)
    c = CoefficientCurve(np.array([0.0, 1 / 3, 1.0]),
                         rng.standard_normal((3, 2)))
    text = c.to_csv_string()
    lines = text.strip().splitlines()
    assert lines[0] == "t,v1,v2"
    parsed = np.array([[float(x) for x in line.split(",")]
                       for line in lines[1:]])
    assert np.array_equal(parsed[:, 0], c.breakpoints)
    assert np.array_equal(parsed[:, 1:], c.values)


def test_curves_immutable():
    c = CoefficientCurve.constant(1.0, 1.0)
    with pytest.raises(ValueError):
        c.values[0] = 99.0

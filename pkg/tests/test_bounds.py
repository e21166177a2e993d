"""Comparison bound, adversarial falsifier, and growth envelopes."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from periwave import (
    OdeBoundParams,
    comparison_bound,
    comparison_falsify,
    count_violations,
    growth_envelopes,
)


def test_param_validation():
    for bad in (dict(gamma=0.0, C=1.0, X0=1.0), dict(gamma=1.0, C=1.0, X0=1.0),
                dict(gamma=0.5, C=-1.0, X0=1.0), dict(gamma=0.5, C=1.0, X0=-1.0)):
        with pytest.raises(ValueError):
            OdeBoundParams(**bad)
    with pytest.raises(ValueError):
        comparison_bound(OdeBoundParams(0.5, 1.0, 1.0), -0.1)
    with pytest.raises(ValueError):
        growth_envelopes(1.0, 1.0, 2.0, -1.0)


def test_bound_closed_form():
    p = OdeBoundParams(gamma=0.5, C=2.0, X0=4.0)
    # (4^0.5 + 2*0.5*t)^2 = (2 + t)^2
    assert comparison_bound(p, 0.0) == pytest.approx(4.0)
    assert comparison_bound(p, 3.0) == pytest.approx(25.0)
    p = OdeBoundParams(gamma=0.25, C=0.0, X0=7.0)
    assert comparison_bound(p, 100.0) == pytest.approx(7.0, rel=1e-12)


def test_extremal_trajectory_saturates():
    """solve_ivp along dX/dt = +C X^(1-gamma) tracks the bound exactly."""
    p = OdeBoundParams(gamma=0.6, C=1.3, X0=2.0)
    sol = solve_ivp(lambda t, x: p.C * np.maximum(x, 0.0) ** (1.0 - p.gamma),
                    (0.0, 8.0), [p.X0], rtol=1e-11, atol=1e-12, dense_output=True)
    for t in np.linspace(0.0, 8.0, 33):
        assert float(sol.sol(t)[0]) == pytest.approx(comparison_bound(p, t), rel=1e-8)


def test_falsifier_margins():
    """Adversarial forcings never beat the bound, including from X0 = 0
    where the clamped-at-zero route realizes the maximal escape."""
    rng = np.random.default_rng(21)
    for _ in range(6):
        p = OdeBoundParams(gamma=float(rng.uniform(0.2, 0.9)),
                           C=float(rng.uniform(0.1, 3.0)),
                           X0=float(rng.uniform(0.0, 5.0)))
        worst = comparison_falsify(p, trials=200, horizon=6.0, segments=16,
                                   rng=np.random.default_rng(5))
        assert worst >= -1e-9 * max(1.0, comparison_bound(p, 6.0))
    zero = OdeBoundParams(gamma=0.5, C=1.0, X0=0.0)
    worst = comparison_falsify(zero, trials=200, horizon=6.0, segments=16,
                               rng=np.random.default_rng(6))
    assert worst >= -1e-9
    # the all-positive forcing reaches the bound itself: zero margin
    assert worst <= 1e-6


def test_envelopes_consistent_with_bound():
    """x envelope is the comparison bound at gamma = r/(r+2); the norm
    and l2 envelopes are powers of the same base."""
    for r in (2.0, 2.7, 3.0):
        gamma = r / (r + 2.0)
        for t in (0.0, 0.5, 4.0, 40.0):
            env = growth_envelopes(3.0, 1.2, r, t, u0_l2=0.7)
            p = OdeBoundParams(gamma=gamma, C=1.2, X0=3.0)
            assert env.x == pytest.approx(comparison_bound(p, t), rel=1e-12)
            base = 3.0 ** gamma + 1.2 * gamma * t
            assert env.norm == pytest.approx(2.0 * base ** ((r + 2) / (2 * r)), rel=1e-12)
            assert env.l2 == pytest.approx(0.7 + 2.0 * t * base ** ((r + 2) / (2 * r)),
                                           rel=1e-12)


def test_envelope_dominates_norm_split():
    """a + b <= 2 sqrt(X) whenever a^2 + b^2 <= 2X, so the norm envelope
    dominates |du/dt| + |grad u| for any split of the quadratic energy."""
    rng = np.random.default_rng(17)
    for _ in range(200):
        x0 = float(rng.uniform(0.0, 10.0))
        c = float(rng.uniform(0.0, 2.0))
        r = float(rng.uniform(2.0, 3.999))
        t = float(rng.uniform(0.0, 20.0))
        env = growth_envelopes(x0, c, r, t)
        # worst admissible split at the envelope energy
        theta = float(rng.uniform(0.0, np.pi / 2.0))
        a = np.sqrt(2.0 * env.x) * np.cos(theta)
        b = np.sqrt(2.0 * env.x) * np.sin(theta)
        assert a + b <= env.norm * (1.0 + 1e-12)


def test_count_violations():
    env = np.array([1.0, 2.0, 3.0])
    assert count_violations(np.array([1.0, 2.0, 3.0]), env) == 0
    # within relative slack
    assert count_violations(np.array([1.0 + 5e-7, 2.0, 3.0]), env) == 0
    assert count_violations(np.array([1.1, 2.0, 3.2]), env) == 2
    assert count_violations(np.array([1.1, 2.5, 3.2]), env, rel_tol=0.5) == 0
    # absolute floor handles zero envelopes
    assert count_violations(np.array([5e-13]), np.array([0.0])) == 0
    assert count_violations(np.array([1e-11]), np.array([0.0])) == 1
    with pytest.raises(ValueError):
        count_violations(np.zeros(3), np.zeros(4))

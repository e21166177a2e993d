"""Nonlinear evolution: energy accounting, identity order, Picard oracle."""

import numpy as np
import pytest
from scipy.integrate import quad

from periwave import (
    ConstantProfile,
    CosineProfile,
    MultiTermSpec,
    NonlinearitySpec,
    RadialGrid,
    SeparablePotential,
    SmoothBumpProfile,
    SpecError,
    State,
    eval_potential,
    random_state,
)
from periwave.nonlinear import (
    default_local_interval,
    energy_rate_constant,
    energy_report,
    evolve,
    evolve_multi,
    multi_rate_constant,
    picard_oracle,
    step_nonlinear,
)
from periwave.presets import REFERENCE_PERIOD, breathing_bump, static_bump


def test_spec_validation():
    with pytest.raises(SpecError):
        NonlinearitySpec(r=1.5)
    with pytest.raises(SpecError):
        NonlinearitySpec(r=4.0)
    NonlinearitySpec(r=2.0)
    NonlinearitySpec(r=3.999)
    multi = MultiTermSpec(leading_exponent=3, terms=((1, static_bump()),))
    with pytest.raises(SpecError):
        NonlinearitySpec(r=2.0, multi=multi)


def test_energy_report_quadrature_oracle():
    """Report pieces against adaptive quadrature of the continuum
    integrals, with the time derivative of q taken by finite difference."""
    g = RadialGrid(r_max=6.0, n=3072)
    r = g.nodes
    u = 0.7 * np.exp(-(r - 1.0) ** 2)
    gdot = 0.4 * np.exp(-(r**2))
    st = State(r * u, r * gdot, g)
    pot = breathing_bump(mean=1.0, amplitude=0.8, radius=2.0)
    nl = NonlinearitySpec(r=3.0)
    t = 0.37
    rep = energy_report(st, pot, nl, t)
    four_pi = 4.0 * np.pi

    uu = lambda s: 0.7 * np.exp(-(s - 1.0) ** 2)
    kin, _ = quad(lambda s: 0.5 * (s * 0.4 * np.exp(-(s**2))) ** 2, 0, 6)
    vp = lambda s: 0.7 * np.exp(-(s - 1.0) ** 2) * (1.0 - 2.0 * s * (s - 1.0))
    grad, _ = quad(lambda s: 0.5 * vp(s) ** 2, 0, 6)
    potq, _ = quad(lambda s: 0.5 * eval_potential(pot, t, s) * (s * uu(s)) ** 2, 0, 6)
    nlt, _ = quad(lambda s: uu(s) ** 5 * s * s / 5.0, 0, 6)
    h = 1e-6
    rhs, _ = quad(lambda s: 0.5 * (eval_potential(pot, t + h, s) - eval_potential(pot, t - h, s))
                  / (2 * h) * (s * uu(s)) ** 2, 0, 6)
    assert rep.kinetic == pytest.approx(four_pi * kin, rel=1e-5)
    assert rep.gradient == pytest.approx(four_pi * grad, rel=1e-4)
    assert rep.potential_term == pytest.approx(four_pi * potq, rel=1e-5)
    assert rep.nonlinear_term == pytest.approx(four_pi * nlt, rel=1e-5)
    assert rep.rhs_identity == pytest.approx(four_pi * rhs, rel=1e-5)
    assert rep.total == pytest.approx(rep.kinetic + rep.gradient + rep.potential_term
                                      + rep.nonlinear_term, rel=1e-14)


def _identity_defect(dt_frac):
    g = RadialGrid(r_max=3.0, n=192)
    st = random_state(g, np.random.default_rng(6), amplitude=1.0, support_radius=2.0)
    pot = breathing_bump(radius=1.5)
    traj = evolve(st, pot, NonlinearitySpec(r=2.0), 0.0, 1.0, dt_frac * g.dr)
    x = np.array([rep.total for rep in traj.reports])
    rhs = np.array([rep.rhs_identity for rep in traj.reports])
    t = traj.times
    # trapezoid accumulation of the identity right side
    acc = np.concatenate([[0.0], np.cumsum(0.5 * (rhs[1:] + rhs[:-1]) * np.diff(t))])
    return float(np.max(np.abs(x - x[0] - acc)))


def test_energy_identity_second_order():
    d1 = _identity_defect(0.5)
    d2 = _identity_defect(0.25)
    d3 = _identity_defect(0.125)
    assert d1 / d2 > 3.5
    assert d2 / d3 > 3.5


def _static_drift(dt_frac):
    g = RadialGrid(r_max=6.0, n=1024)
    st = random_state(g, np.random.default_rng(8), amplitude=1.5, support_radius=3.0)
    traj = evolve(st, static_bump(radius=2.0), NonlinearitySpec(r=2.0),
                  0.0, 4.0 * np.pi, dt_frac * g.dr, report_every=40)
    x = np.array([rep.total for rep in traj.reports])
    assert np.all(np.array([rep.rhs_identity for rep in traj.reports]) == 0.0)
    return float(np.max(np.abs(x - x[0])) / x[0])


def test_static_conservation():
    """Frozen coefficients: X wobbles at O(dt^2) with no secular drift."""
    d_quarter = _static_drift(0.25)
    assert d_quarter < 1e-5
    assert d_quarter / _static_drift(0.125) > 3.0


def test_rate_constant_dominates_identity():
    """|dX/dt| <= C X^(2/(r+2)) over a seeded cloud of states, with the
    bound not vacuous (the best state gets within a factor 20)."""
    pot = breathing_bump()
    g = RadialGrid(r_max=4.0, n=128)
    for r_exp in (2.0, 3.0):
        nl = NonlinearitySpec(r=r_exp)
        c = energy_rate_constant(pot, nl)
        worst = 0.0
        rng = np.random.default_rng(10)
        for _ in range(300):
            st = random_state(g, rng, modes=8,
                              amplitude=float(rng.uniform(0.05, 30.0)),
                              support_radius=float(rng.uniform(1.0, 4.0)))
            rep = energy_report(st, pot, nl, float(rng.uniform(0.0, np.pi)))
            ratio = abs(rep.rhs_identity) / rep.total ** (2.0 / (r_exp + 2.0))
            worst = max(worst, ratio)
        assert worst <= c
        assert worst > 0.05 * c


def test_rate_constant_closed_form():
    pot = breathing_bump(mean=1.0, amplitude=0.8, radius=2.0)
    nl = NonlinearitySpec(r=2.0)
    sup_dq = 0.8 * 2.0 * np.pi / REFERENCE_PERIOD
    vol = 4.0 * np.pi / 3.0 * 8.0
    assert energy_rate_constant(pot, nl) == pytest.approx(
        0.5 * sup_dq * vol ** 0.5 * 2.0, rel=1e-12)


def test_picard_agrees_with_march():
    """The Picard fixed point is the leapfrog trajectory itself."""
    g = RadialGrid(r_max=3.0, n=256)
    st = random_state(g, np.random.default_rng(4), amplitude=0.8, support_radius=2.0)
    pot = breathing_bump()
    nl = NonlinearitySpec(r=2.0)
    res = picard_oracle(st, pot, nl, dt=0.5 * g.dr, iterations=8)
    assert res.contracted
    assert res.history[2] < 0.5 * res.history[1]
    tau = default_local_interval(st.norm1(), nl.r)
    steps = max(1, int(np.ceil(tau / (0.5 * g.dr) - 1e-12)))
    traj = evolve(st, pot, nl, 0.0, tau, tau / steps)
    gap = (res.final - traj.states[-1]).norm1()
    assert gap < 1e-10


def test_picard_flags_noncontraction_outside_window():
    g = RadialGrid(r_max=3.0, n=256)
    st = random_state(g, np.random.default_rng(4), amplitude=20.0, support_radius=2.0)
    pot = breathing_bump()
    nl = NonlinearitySpec(r=2.0)
    wide = picard_oracle(st, pot, nl, dt=0.5 * g.dr, tau=2.0, iterations=8)
    assert not wide.contracted
    # the guaranteed local window restores contraction
    safe = picard_oracle(st, pot, nl, dt=0.002, iterations=8)
    assert safe.contracted


def test_abort_on_hopeless_states():
    g = RadialGrid(r_max=3.0, n=256)
    nl = NonlinearitySpec(r=2.0)
    with np.errstate(over="ignore", invalid="ignore"):
        st = random_state(g, np.random.default_rng(1), amplitude=1e160, support_radius=2.0)
        with pytest.raises(FloatingPointError):
            evolve(st, static_bump(), nl, 0.0, 0.1, 0.5 * g.dr)
        st = random_state(g, np.random.default_rng(1), amplitude=1e9, support_radius=2.0)
        with pytest.raises(FloatingPointError):
            step_nonlinear(st, static_bump(), nl, 0.0, 0.5 * g.dr)


def test_guard_substepping_matches_explicit_march():
    """A state big enough to trip the amplitude guard takes one guarded
    step equal to the equivalent explicit substep march, and stays close
    to a much finer reference."""
    g = RadialGrid(r_max=3.0, n=96)
    st = random_state(g, np.random.default_rng(12), amplitude=40.0, support_radius=2.0)
    nl = NonlinearitySpec(r=3.0)
    amp = float(np.max(np.abs(st.v / g.nodes))) ** 3 * g.dr ** 2
    assert amp > 0.1  # guard active
    sub = int(np.ceil(np.sqrt(amp / 0.1)))
    assert sub > 1

    def march(m):
        out = st.copy()
        for k in range(m):
            out = step_nonlinear(out, None, nl, k * g.dr / m, g.dr / m)
        return out

    guarded = step_nonlinear(st, None, nl, 0.0, g.dr)
    assert (guarded - march(sub)).norm1() == 0.0
    ref = march(256)
    assert (guarded - ref).norm1() < 1e-2 * ref.norm1()


def _constant_multi():
    flat = SeparablePotential(ConstantProfile(value=0.6, period=REFERENCE_PERIOD),
                              SmoothBumpProfile(radius=1.5))
    return MultiTermSpec(leading_exponent=3, terms=((0, flat), (1, flat)))


def test_multi_static_conservation():
    g = RadialGrid(r_max=4.0, n=512)
    st = random_state(g, np.random.default_rng(14), amplitude=1.2, support_radius=2.5)

    def drift(dt_frac):
        traj = evolve_multi(st, _constant_multi(), 0.0, 4.0 * np.pi, dt_frac * g.dr,
                            report_every=50)
        x = np.array([rep.total for rep in traj.reports])
        assert traj.reports[0].multi_terms is not None
        assert len(traj.reports[0].multi_terms) == 2
        return float(np.max(np.abs(x - x[0])) / x[0])

    d = drift(0.25)
    assert d < 1e-5
    assert d / drift(0.125) > 3.0


def test_multi_rate_constant_dominates():
    """|dX/dt| <= B (1 + X)^(1 - 1/(r+2)) along a breathing collection."""
    bump = SmoothBumpProfile(radius=2.0)
    t0 = SeparablePotential(CosineProfile(mean=1.0, amplitude=0.8, period=REFERENCE_PERIOD), bump)
    t1 = SeparablePotential(CosineProfile(mean=0.6, amplitude=0.5, period=2.0), bump)
    multi = MultiTermSpec(leading_exponent=3, terms=((0, t0), (1, t1)))
    b = multi_rate_constant(multi)
    g = RadialGrid(r_max=4.0, n=256)
    st = random_state(g, np.random.default_rng(15), amplitude=2.0, support_radius=2.5)
    traj = evolve_multi(st, multi, 0.0, 6.0, 0.5 * g.dr, report_every=10)
    for rep in traj.reports:
        y = 1.0 + rep.total
        assert abs(rep.rhs_identity) <= b * y ** (1.0 - 1.0 / 5.0)


def test_local_interval_closed_form():
    assert default_local_interval(1.0, 2.0) == pytest.approx(0.5 / 4.0)
    assert default_local_interval(0.0, 3.0) == pytest.approx(0.5)
    assert default_local_interval(3.0, 2.0, c=1.0) == pytest.approx(1.0 / 16.0)

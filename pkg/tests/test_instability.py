"""Frechet slopes, instability certificates, and saturation contrast."""

import math

import numpy as np
import pytest

from periwave import (
    NonlinearitySpec,
    RadialGrid,
    balance_amplitude,
    dominant_eigenvalue,
    energy_rate_constant,
    frechet_slope,
    instability_certificate,
    predicted_escape,
    random_state,
    saturation_contrast,
)
from periwave.instability import monodromy_map
from periwave.nonlinear import energy_report, evolve
from periwave.presets import breathing_bump, reference_barrier


@pytest.fixture(scope="module")
def coarse_floquet():
    """Shell-core Floquet data on a coarse grid, shared across tests."""
    grid = RadialGrid(r_max=7.0, n=350)
    pot = reference_barrier(epsilon=0.1)
    res = dominant_eigenvalue(pot, 0.5 * grid.dr, grid, seed=0)
    assert res.converged
    return pot, res


def test_frechet_slope_tracks_power():
    """|F(sh) - sLh| ~ s^(r+1): the linear map is the derivative at zero."""
    g = RadialGrid(r_max=3.0, n=128)
    pot = breathing_bump(radius=1.5)
    direction = random_state(g, np.random.default_rng(3), amplitude=1.0,
                             support_radius=2.0)
    for r_exp in (2.0, 3.0):
        fit = frechet_slope(pot, NonlinearitySpec(r=r_exp), 0.5 * g.dr, direction)
        assert not fit.exact_linear
        assert fit.slope == pytest.approx(r_exp + 1.0, abs=0.1)


def test_frechet_slope_exact_linear_and_floor():
    g = RadialGrid(r_max=3.0, n=128)
    pot = breathing_bump(radius=1.5)
    direction = random_state(g, np.random.default_rng(3), amplitude=1.0,
                             support_radius=2.0)
    fit = frechet_slope(pot, None, 0.5 * g.dr, direction)
    assert fit.exact_linear and math.isnan(fit.slope)
    with pytest.raises(ValueError):
        # only one scale survives the rounding floor
        frechet_slope(pot, NonlinearitySpec(r=3.0), 0.5 * g.dr, direction,
                      scales=(1.0, 1e-7, 1e-8))


def test_monodromy_map_composes_like_evolve():
    g = RadialGrid(r_max=3.0, n=128)
    pot = breathing_bump(radius=1.5)
    nl = NonlinearitySpec(r=2.0)
    st = random_state(g, np.random.default_rng(5), amplitude=0.5, support_radius=2.0)
    T = pot.period
    dt = 0.5 * g.dr
    steps = max(1, math.ceil(T / dt - 1e-12))
    h = T / steps
    apply = monodromy_map(pot, nl, dt)
    x = st.copy()
    for _ in range(3):
        x = apply(x)
    y = evolve(st, pot, nl, 0.0, 3 * T, h, report_every=10**9).states[-1]
    assert (x - y).norm1() < 1e-8 * max(1.0, x.norm1())


def test_balance_amplitude_equalizes_shares():
    g = RadialGrid(r_max=3.0, n=128)
    pot = breathing_bump(radius=1.5)
    nl = NonlinearitySpec(r=3.0)
    st = random_state(g, np.random.default_rng(8), amplitude=1.0, support_radius=2.0)
    a = balance_amplitude(pot, nl, st)
    rep = energy_report(a * st, pot, nl, t=0.0)
    assert rep.nonlinear_term == pytest.approx(rep.potential_term, rel=1e-10)
    from periwave import ZeroPotential, zero_state

    with pytest.raises(ValueError):
        balance_amplitude(pot, nl, zero_state(g))
    free = ZeroPotential(period=np.pi)
    a_free = balance_amplitude(free, nl, st)
    rep_free = energy_report(a_free * st, free, nl, t=0.0)
    assert rep_free.nonlinear_term == pytest.approx(rep_free.gradient, rel=1e-10)


def test_predicted_escape_closed_form():
    assert predicted_escape(1e-3, 1.0, 2.0) == pytest.approx(np.log(1e3) / np.log(2.0))
    assert predicted_escape(1e-3, 1.0, 1.0) == float("inf")
    assert predicted_escape(1e-3, 1.0, 0.5) == float("inf")


def test_certificate_escape_times(coarse_floquet):
    """Escape happens near log(eta/delta)/log(rho) with the growth clause
    holding along the way; a decade smaller delta waits log10/log rho
    more periods."""
    pot, floq = coarse_floquet
    nl = NonlinearitySpec(r=2.0)
    dt = 0.5 * floq.eigenstate.grid.dr
    runs = instability_certificate(pot, nl, dt, deltas=(1e-2, 1e-3), max_n=40,
                                   floquet=floq)
    assert len(runs) == 2
    for run in runs:
        assert run.certificate
        assert run.escaped_at is not None
        assert run.rho == pytest.approx(floq.magnitude)
        assert run.iterates[0] == pytest.approx(run.delta, rel=1e-9)
        assert run.min_growth_ratio >= 0.5
        predicted = predicted_escape(run.delta, run.eta, run.rho)
        assert run.escaped_at == pytest.approx(predicted, abs=2.0)
    gap = runs[1].escaped_at - runs[0].escaped_at
    assert gap == pytest.approx(np.log(10.0) / np.log(floq.magnitude), abs=1.5)


def test_certificate_random_direction(coarse_floquet):
    pot, floq = coarse_floquet
    nl = NonlinearitySpec(r=2.0)
    dt = 0.5 * floq.eigenstate.grid.dr
    runs = instability_certificate(pot, nl, dt, deltas=(1e-2,), max_n=60,
                                   floquet=floq, direction="random", seed=4)
    assert runs[0].certificate and runs[0].escaped_at is not None
    # random data waits for the unstable mode to emerge
    eig = instability_certificate(pot, nl, dt, deltas=(1e-2,), max_n=60, floquet=floq)
    assert runs[0].escaped_at >= eig[0].escaped_at
    with pytest.raises(ValueError):
        instability_certificate(pot, nl, dt, floquet=floq, direction="sideways")
    with pytest.raises(ValueError):
        instability_certificate(pot, nl, dt)  # no grid, no floquet


def test_saturation_contrast(coarse_floquet):
    """Linear growth at the Floquet rate against a defocusing run that
    respects the polynomial envelope with zero violations."""
    pot, floq = coarse_floquet
    nl = NonlinearitySpec(r=2.0)
    grid = floq.eigenstate.grid
    dt = 0.5 * grid.dr
    data = (1e-3 / floq.eigenstate.norm1()) * floq.eigenstate
    report = saturation_contrast(pot, nl, dt, data, n_periods=40,
                                 rate_constant=energy_rate_constant(pot, nl))
    assert report.envelope_violations == 0
    assert report.linear_rate == pytest.approx(np.log(floq.magnitude) / pot.period,
                                               rel=0.05)
    assert report.divergence_time is not None
    # the linear run is exponential; the defocusing run is not
    assert report.linear_norms[-1] > 100.0 * report.nonlinear_norms[-1]

"""Nonlinear instability experiments around a linearly unstable period map.

The discrete system iterates the nonlinear one-period map from a small
multiple of the dominant linear eigenstate.  Three probes:

  * frechet_slope: the gap between the nonlinear and linear period maps
    scales like amplitude^(r+1), so the linear map is the Frechet
    derivative at zero and its unstable eigenvalue is decisive;
  * instability_certificate: iterates grow like rho^n and clear a fixed
    threshold after about log(eta/delta)/log(rho) periods no matter how
    small delta is, certifying instability of the zero state;
  * saturation_contrast: side-by-side linear and defocusing runs show
    exponential growth against polynomially capped energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nonlinear import NonlinearitySpec, Trajectory, energy_report, evolve
from .potentials import Potential
from .radial import FloquetResult, _period_steps, dominant_eigenvalue, period_map
from .states import State

NOISE_FLOOR = 1e-11  # relative remainder level treated as pure rounding


def monodromy_map(potential: Potential, nl: NonlinearitySpec | None, dt: float):
    """One-period map of the (non)linear flow as a State -> State callable.

    dt is snapped to divide the period exactly, matching the linear
    period map step for step, so the two maps differ only through the
    nonlinear force."""
    if nl is None:
        return _linear_map(potential, dt)
    T = potential.period
    _, h = _period_steps(T, dt)

    def apply(state: State) -> State:
        return evolve(state, potential, nl, 0.0, T, h, report_every=10**9).states[-1]

    return apply


def _linear_map(potential: Potential, dt: float):
    cache = {}

    def apply(state: State) -> State:
        key = state.grid
        if key not in cache:
            cache[key] = period_map(potential, state.grid, dt)
        return cache[key](state)

    return apply


@dataclass
class SlopeFit:
    slope: float
    scales: list[float]
    remainders: list[float]
    exact_linear: bool


def frechet_slope(potential: Potential, nl: NonlinearitySpec | None, dt: float,
                  direction: State, scales=(1.0, 0.3, 0.1, 0.03, 0.01)) -> SlopeFit:
    """Log-log slope of |F(s h) - s L h|_1 against the amplitude s.

    F is the nonlinear period map, L the linear one; for the leading
    power r the slope approaches r + 1.  Scales whose remainder sits at
    the rounding floor are dropped; at least three must survive.  With
    the nonlinearity disabled every remainder is pure rounding and the
    fit is reported as exact_linear instead of a slope.
    """
    lin = _linear_map(potential, dt)
    l_image = lin(direction)
    nl_map = monodromy_map(potential, nl, dt)
    used_s: list[float] = []
    rems: list[float] = []
    floors: list[bool] = []
    for s in scales:
        image = nl_map(s * direction)
        rem = (image - s * l_image).norm1()
        used_s.append(float(s))
        rems.append(float(rem))
        floors.append(rem <= NOISE_FLOOR * s * l_image.norm1())
    if all(floors):
        return SlopeFit(slope=float("nan"), scales=used_s, remainders=rems, exact_linear=True)
    keep = [(s, r) for s, r, f in zip(used_s, rems, floors) if not f and r > 0]
    if len(keep) < 3:
        raise ValueError("fewer than 3 scales above the rounding floor; enlarge scales")
    ls = np.log([s for s, _ in keep])
    lr = np.log([r for _, r in keep])
    slope = float(np.polyfit(ls, lr, 1)[0])
    return SlopeFit(slope=slope, scales=used_s, remainders=rems, exact_linear=False)


def balance_amplitude(potential: Potential, nl: NonlinearitySpec, eigenstate: State) -> float:
    """Amplitude A at which the nonlinear energy share of A * eigenstate
    catches up with its potential share (gradient share when the
    potential vanishes)."""
    rep = energy_report(eigenstate, potential, nl, t=0.0)
    reference = rep.potential_term if rep.potential_term > 0 else rep.gradient
    if rep.nonlinear_term <= 0 or reference <= 0:
        raise ValueError("eigenstate gives no usable energy balance")
    return float((reference / rep.nonlinear_term) ** (1.0 / nl.r))


@dataclass
class InstabilityRun:
    delta: float
    eta: float
    rho: float
    iterates: list[float]
    escaped_at: int | None
    certificate: bool
    min_growth_ratio: float


def instability_certificate(potential: Potential, nl: NonlinearitySpec, dt: float,
                            deltas=(1e-3, 1e-4, 1e-5), eta: float | None = None,
                            max_n: int = 200, floquet: FloquetResult | None = None,
                            growth_constant: float = 0.5,
                            grid=None, seed: int = 0,
                            direction: str = "eigenstate") -> list[InstabilityRun]:
    """Iterate the nonlinear period map from delta * eigenstate.

    For each delta the run records |w_n|_1 until the threshold eta is
    cleared (or max_n is hit).  The certificate holds when the escape
    happens and, meanwhile, |w_n| >= growth_constant * rho^n * delta,
    i.e. the linear rate is realized up to a fixed constant arbitrarily
    close to the zero state.  eta defaults to 10% of the amplitude where
    the nonlinear energy share of the eigenstate matches the potential
    share.  direction="random" starts from seeded random data instead of
    the unstable mode; escape then waits for the mode to emerge from the
    projection, so the min_growth_ratio clause is reported but the
    certificate only requires escape.
    """
    if direction not in ("eigenstate", "random"):
        raise ValueError("direction must be 'eigenstate' or 'random'")
    if floquet is None:
        if grid is None:
            raise ValueError("need a grid when no Floquet result is supplied")
        floquet = dominant_eigenvalue(potential, dt, grid, seed=seed)
    rho = floquet.magnitude
    phi = (1.0 / floquet.eigenstate.norm1()) * floquet.eigenstate
    if direction == "random":
        from .states import random_state
        phi = random_state(floquet.eigenstate.grid, np.random.default_rng(seed),
                           amplitude=1.0, support_radius=potential.support_radius)
    if eta is None:
        eta = 0.1 * balance_amplitude(potential, nl, phi)
    nl_map = monodromy_map(potential, nl, dt)

    runs: list[InstabilityRun] = []
    for delta in deltas:
        state = delta * phi
        norms = [state.norm1()]
        escaped_at = None
        min_ratio = np.inf
        for n in range(1, max_n + 1):
            state = nl_map(state)
            nn = state.norm1()
            norms.append(nn)
            if rho > 1.0:
                min_ratio = min(min_ratio, nn / (delta * rho ** n))
            if nn > eta:
                escaped_at = n
                break
        certified = (escaped_at is not None and rho > 1.0
                     and (direction == "random" or min_ratio >= growth_constant))
        runs.append(InstabilityRun(delta=float(delta), eta=float(eta), rho=float(rho),
                                   iterates=[float(x) for x in norms],
                                   escaped_at=escaped_at, certificate=certified,
                                   min_growth_ratio=float(min_ratio) if np.isfinite(min_ratio) else 0.0))
    return runs


def predicted_escape(delta: float, eta: float, rho: float) -> float:
    """Period count at which delta * rho^n clears eta."""
    if rho <= 1.0:
        return float("inf")
    return math.log(eta / delta) / math.log(rho)


@dataclass
class ContrastReport:
    times: np.ndarray
    linear_norms: np.ndarray
    nonlinear_norms: np.ndarray
    energies: np.ndarray
    envelope: np.ndarray
    divergence_time: float | None
    linear_rate: float
    nonlinear_power_slope: float
    envelope_violations: int


def saturation_contrast(potential: Potential, nl: NonlinearitySpec, dt: float,
                        data: State, n_periods: int, rate_constant: float) -> ContrastReport:
    """Linear versus defocusing run from the same small data.

    Checkpoints once per period.  Reports the first time the two norm1
    histories split by 10%, the exponential rate fitted on the linear
    run, the slope of |w|_1^(2r/(r+2)) against t on the nonlinear run
    (at most linear growth in that power), and the count of energy
    samples above the polynomial envelope (exactly zero for a correct
    bound).
    """
    from .bounds import count_violations, growth_envelopes

    T = potential.period
    lin = _linear_map(potential, dt)
    nl_map = monodromy_map(potential, nl, dt)

    rep0 = energy_report(data, potential, nl, t=0.0)
    X0 = rep0.total
    u0_l2 = math.sqrt(data.energy_norms().l2_u)

    lin_state = data.copy()
    nl_state = data.copy()
    times = [0.0]
    lin_norms = [lin_state.norm1()]
    nl_norms = [nl_state.norm1()]
    energies = [X0]
    envelope = [growth_envelopes(X0, rate_constant, nl.r, 0.0).x]
    lin_log_offset = 0.0
    lin_logs = [math.log(lin_norms[0])]
    for n in range(1, n_periods + 1):
        lin_state = lin(lin_state)
        nl_state = nl_map(nl_state)
        nn = lin_state.norm1()
        if nn > 1e100:
            lin_log_offset += math.log(nn)
            lin_state = (1.0 / nn) * lin_state
            lin_logs.append(lin_log_offset)
            lin_norms.append(float("inf"))
        else:
            lin_logs.append(lin_log_offset + math.log(nn))
            lin_norms.append(nn if lin_log_offset == 0.0 else float("inf"))
        nl_norms.append(nl_state.norm1())
        rep = energy_report(nl_state, potential, nl, t=0.0)
        energies.append(rep.total)
        envelope.append(growth_envelopes(X0, rate_constant, nl.r, n * T).x)
        times.append(n * T)

    times_a = np.asarray(times)
    lin_a = np.exp(np.asarray(lin_logs))
    nl_a = np.asarray(nl_norms)
    div_time = None
    for t, a, b in zip(times_a, lin_a, nl_a):
        if abs(a - b) > 0.1 * max(a, b):
            div_time = float(t)
            break
    i0 = len(times_a) // 2
    linear_rate = float(np.polyfit(times_a[i0:], np.asarray(lin_logs)[i0:], 1)[0])
    power = 2.0 * nl.r / (nl.r + 2.0)
    nonlinear_power_slope = float(np.polyfit(times_a[i0:], nl_a[i0:] ** power, 1)[0])
    env_a = np.asarray(envelope)
    violations = count_violations(energies, env_a)
    return ContrastReport(times=times_a, linear_norms=lin_a, nonlinear_norms=nl_a,
                          energies=np.asarray(energies), envelope=env_a,
                          divergence_time=div_time, linear_rate=linear_rate,
                          nonlinear_power_slope=nonlinear_power_slope,
                          envelope_violations=violations)

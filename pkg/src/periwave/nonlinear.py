"""Defocusing nonlinear evolution and its energy accounting.

The radial equation with power nonlinearity reads, in string form,

    v_tt = v_rr - q(t, r) v - |v/r|^p v,      2 <= p < 4,

optionally with lower-order periodic terms q_j(t, r) |v/r|^j v for
j < p.  The same kick-drift-kick integrator as the linear solver is
used; the nonlinear force is explicit.  The energy

    X(t) = integral ( |du/dt|^2/2 + |grad u|^2/2 + q |u|^2/2
                      + |u|^(p+2)/(p+2) ) dx

obeys, along semi-discrete trajectories exactly and along leapfrog
trajectories to O(dt^2),

    dX/dt = (1/2) integral dq/dt |u|^2 dx   (plus analogous lower terms),

which grounds the growth envelopes checked by the bounds module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .potentials import FOUR_PI, MultiTermSpec, Potential, SpecError
from .radial import CflError, _check_cfl, _laplacian, _period_steps
from .states import RadialGrid, State, grad_sq_integral

# substep when max |u|^p dt^2 exceeds this (explicit nonlinear force)
AMPLITUDE_GUARD = 0.1
# past this many substeps the state is numerically hopeless; abort instead
MAX_SUBSTEPS = 100_000


@dataclass(frozen=True)
class NonlinearitySpec:
    """Leading defocusing power |u|^r u; optional lower-order terms."""

    r: float
    multi: MultiTermSpec | None = None

    def __post_init__(self):
        if not 2.0 <= self.r < 4.0:
            raise SpecError("nonlinearity exponent must satisfy 2 <= r < 4")
        if self.multi is not None and self.multi.leading_exponent != self.r:
            raise SpecError("multi-term leading exponent must match r")


@dataclass(frozen=True)
class EnergyReport:
    t: float
    kinetic: float
    gradient: float
    potential_term: float
    nonlinear_term: float
    rhs_identity: float
    multi_terms: tuple[float, ...] | None = None

    @property
    def total(self) -> float:
        extra = sum(self.multi_terms) if self.multi_terms else 0.0
        return self.kinetic + self.gradient + self.potential_term + self.nonlinear_term + extra


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[State]
    reports: list[EnergyReport]
    dt: float


def _power_force(r_nodes: np.ndarray, p: float) -> Callable[[np.ndarray], np.ndarray]:
    def force(v: np.ndarray) -> np.ndarray:
        return np.abs(v / r_nodes) ** p * v
    return force


class _ForceModel:
    """Bundle of grid-sampled potential terms and nonlinear powers."""

    def __init__(self, grid: RadialGrid, potential: Potential | None,
                 nl: NonlinearitySpec | None):
        self.grid = grid
        r = grid.nodes
        self.r_nodes = r
        self.potential = potential
        self.nl = nl
        self.q = potential.on_grid(r) if potential is not None else None
        self.q_dt = potential.dt_on_grid(r) if potential is not None else None
        self.p = nl.r if nl is not None else None
        self.terms = []
        if nl is not None and nl.multi is not None:
            for j, pot in nl.multi.terms:
                self.terms.append((j, pot.on_grid(r), pot.dt_on_grid(r)))

    def accel(self, t: float, v: np.ndarray) -> np.ndarray:
        a = _laplacian(v, self.grid.dr ** 2)
        if self.q is not None:
            a -= self.q(t) * v
        if self.p is not None:
            u_abs = np.abs(v / self.r_nodes)
            a -= u_abs ** self.p * v
            for j, qj, _ in self.terms:
                a -= qj(t) * u_abs ** j * v
        a[-1] = 0.0
        return a

    def max_u_power(self, v: np.ndarray) -> float:
        if self.p is None:
            return 0.0
        return float(np.max(np.abs(v / self.r_nodes)) ** self.p)

    def report(self, t: float, v: np.ndarray, w: np.ndarray) -> EnergyReport:
        grid = self.grid
        dr = grid.dr
        kinetic = 0.5 * FOUR_PI * dr * float(np.sum(np.abs(w) ** 2))
        gradient = 0.5 * grad_sq_integral(grid, v)
        v_sq = np.abs(v) ** 2
        if self.q is not None:
            potential_term = 0.5 * FOUR_PI * dr * float(np.sum(self.q(t) * v_sq))
            rhs = 0.5 * FOUR_PI * dr * float(np.sum(self.q_dt(t) * v_sq))
        else:
            potential_term = 0.0
            rhs = 0.0
        nonlinear_term = 0.0
        multi_vals = None
        if self.p is not None:
            u_abs = np.abs(v / self.r_nodes)
            dens = u_abs ** (self.p + 2) * self.r_nodes ** 2
            nonlinear_term = FOUR_PI * dr * float(np.sum(dens)) / (self.p + 2)
            if self.terms:
                vals = []
                for j, qj, qj_dt in self.terms:
                    dens_j = u_abs ** (j + 2) * self.r_nodes ** 2
                    vals.append(FOUR_PI * dr * float(np.sum(qj(t) * dens_j)) / (j + 2))
                    rhs += FOUR_PI * dr * float(np.sum(qj_dt(t) * dens_j)) / (j + 2)
                multi_vals = tuple(vals)
        return EnergyReport(t=t, kinetic=kinetic, gradient=gradient,
                            potential_term=potential_term, nonlinear_term=nonlinear_term,
                            rhs_identity=rhs, multi_terms=multi_vals)


def _guarded_step(model: _ForceModel, v, w, t: float, dt: float):
    # split the step when the explicit nonlinear force would be too stiff
    sub = 1
    amp = model.max_u_power(v) * dt * dt
    if not math.isfinite(amp):
        raise FloatingPointError(f"non-finite field amplitude at t={t:.6g}")
    if amp > AMPLITUDE_GUARD:
        sub = math.ceil(math.sqrt(amp / AMPLITUDE_GUARD))
        if sub > MAX_SUBSTEPS:
            raise FloatingPointError(
                f"nonlinear force too stiff at t={t:.6g} ({sub} substeps needed)")
    h = dt / sub
    dr2 = model.grid.dr ** 2
    for i in range(sub):
        ti = t + i * h
        a0 = model.accel(ti, v)
        w_half = w + (0.5 * h) * a0
        v = v + h * w_half
        v[-1] = 0.0
        a1 = model.accel(ti + h, v)
        w = w_half + (0.5 * h) * a1
        w[-1] = 0.0
    return v, w


def step_nonlinear(state: State, potential: Potential | None, nl: NonlinearitySpec | None,
                   t: float, dt: float) -> State:
    """One leapfrog step including the explicit nonlinear force."""
    _check_cfl(dt, state.grid)
    model = _ForceModel(state.grid, potential, nl)
    v, w = _guarded_step(model, state.v.copy(), state.w.copy(), t, dt)
    return State(v, w, state.grid)


def evolve(state: State, potential: Potential | None, nl: NonlinearitySpec | None,
           t0: float, t1: float, dt: float, report_every: int = 1) -> Trajectory:
    """March from t0 to t1, recording states and energy reports every
    report_every steps (the final state is always recorded)."""
    _check_cfl(dt, state.grid)
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    model = _ForceModel(state.grid, potential, nl)
    span = t1 - t0
    steps = max(1, math.ceil(span / dt - 1e-12)) if span > 0 else 0
    final_dt = span - (steps - 1) * dt if steps else dt

    v = state.v.copy()
    w = state.w.copy()
    times = [t0]
    states = [State(v.copy(), w.copy(), state.grid)]
    reports = [model.report(t0, v, w)]
    t = t0
    for k in range(steps):
        h = dt if k < steps - 1 else final_dt
        v, w = _guarded_step(model, v, w, t, h)
        t = t0 + (k + 1) * dt if k < steps - 1 else t1
        if (k + 1) % report_every == 0 or k == steps - 1:
            times.append(t)
            states.append(State(v.copy(), w.copy(), state.grid))
            rep = model.report(t, v, w)
            if not math.isfinite(rep.total):
                raise FloatingPointError(
                    f"non-finite energy at t={t:.6g} (step {k + 1} of {steps})")
            reports.append(rep)
    return Trajectory(times=np.asarray(times), states=states, reports=reports, dt=dt)


def evolve_multi(state: State, multi: MultiTermSpec, t0: float, t1: float, dt: float,
                 report_every: int = 1) -> Trajectory:
    """Evolution with the full term collection q_j |u|^j u plus the
    leading power; reports carry one column per collection term."""
    nl = NonlinearitySpec(r=float(multi.leading_exponent), multi=multi)
    return evolve(state, None, nl, t0, t1, dt, report_every=report_every)


def energy_report(state: State, potential: Potential | None, nl: NonlinearitySpec | None,
                  t: float) -> EnergyReport:
    model = _ForceModel(state.grid, potential, nl)
    return model.report(t, state.v, state.w)


def ball_volume(radius: float) -> float:
    return FOUR_PI / 3.0 * radius ** 3


def energy_rate_constant(potential: Potential, nl: NonlinearitySpec) -> float:
    """Constant C with |dX/dt| <= C X^(2/(r+2)) along trajectories.

    Chains the energy identity with Hoelder on the potential support and
    the nonlinear part of X:

        C = (1/2) sup|dq/dt| * vol(support ball)^(r/(r+2)) * (r+2)^(2/(r+2)).
    """
    r = nl.r
    sup_dq = potential.max_time_derivative()
    vol = ball_volume(potential.support_radius)
    return 0.5 * sup_dq * vol ** (r / (r + 2)) * (r + 2) ** (2.0 / (r + 2))


def multi_rate_constant(multi: MultiTermSpec) -> float:
    """Assembled constant B with |dX/dt| <= B (1 + X)^(1 - 1/(r+2)) for
    the term collection; one Hoelder block per term, summed."""
    r = multi.leading_exponent
    total = 0.0
    for j, pot in multi.terms:
        sup_dq = pot.max_time_derivative()
        vol = ball_volume(pot.support_radius)
        total += (sup_dq / (j + 2)
                  * vol ** ((r - j) / (r + 2))
                  * (r + 2) ** ((j + 2) / (r + 2)))
    return total


# ---------------------------------------------------------------------------
# Picard iteration oracle


@dataclass
class PicardResult:
    final: State
    history: list[float]
    contracted: bool


def default_local_interval(data_norm1: float, r: float, c: float = 0.5) -> float:
    """Local existence interval tau = c (1 + |data|_1)^(-r)."""
    return c * (1.0 + data_norm1) ** (-r)


def picard_oracle(data: State, potential: Potential, nl: NonlinearitySpec,
                  dt: float, tau: float | None = None, iterations: int = 8) -> PicardResult:
    """Fixed-point iteration for the nonlinear problem on [0, tau]:
    repeated linear solves with the nonlinearity frozen along the
    previous iterate.  history[i] = sup over [0, tau] of the energy-norm
    gap between successive iterates; an honest contraction halves it
    each round after the first.

    Three consecutive growing gaps abort the loop and flag
    non-contraction (caller shrinks tau).
    """
    _check_cfl(dt, data.grid)
    grid = data.grid
    if tau is None:
        tau = default_local_interval(data.norm1(), nl.r)
    steps, h = _period_steps(tau, dt)
    dr2 = grid.dr ** 2
    r_nodes = grid.nodes
    sampler = potential.on_grid(r_nodes)
    p = nl.r

    prev_v = np.zeros((steps + 1, grid.n))
    prev_w = np.zeros((steps + 1, grid.n))
    history: list[float] = []
    contracted = True
    grow = 0
    for it in range(iterations):
        # linear march with source frozen on the previous iterate
        cur_v = np.empty_like(prev_v)
        cur_w = np.empty_like(prev_w)
        v = data.v.copy()
        w = data.w.copy()
        cur_v[0] = v
        cur_w[0] = w
        for k in range(steps):
            t = k * h
            src0 = np.abs(prev_v[k] / r_nodes) ** p * prev_v[k]
            src1 = np.abs(prev_v[k + 1] / r_nodes) ** p * prev_v[k + 1]
            a0 = _laplacian(v, dr2) - sampler(t) * v - src0
            a0[-1] = 0.0
            w_half = w + (0.5 * h) * a0
            v = v + h * w_half
            v[-1] = 0.0
            a1 = _laplacian(v, dr2) - sampler(t + h) * v - src1
            a1[-1] = 0.0
            w = w_half + (0.5 * h) * a1
            w[-1] = 0.0
            cur_v[k + 1] = v
            cur_w[k + 1] = w
        gap = 0.0
        for k in range(steps + 1):
            diff = State(cur_v[k] - prev_v[k], cur_w[k] - prev_w[k], grid)
            gap = max(gap, diff.norm1())
        history.append(gap)
        if len(history) >= 2 and history[-1] > history[-2]:
            grow += 1
            if grow >= 3:
                contracted = False
                prev_v, prev_w = cur_v, cur_w
                break
        else:
            grow = 0
        prev_v, prev_w = cur_v, cur_w

    if contracted and len(history) >= 3:
        for a, b in zip(history[1:-1], history[2:]):
            if b > 0.5 * a * (1.0 + 1e-9) and b > 1e-14 * history[0]:
                contracted = False
                break
    return PicardResult(final=State(prev_v[-1].copy(), prev_w[-1].copy(), grid),
                        history=history, contracted=contracted)

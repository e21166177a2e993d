"""Linear radial wave propagation and one-period spectral probes.

The string form v_tt = v_rr - q(t, r) v (v = r u) is integrated with a
kick-drift-kick leapfrog: explicit, time-reversible, second order, and
symplectic for frozen coefficients, so static-potential energy shows no
secular drift.  Stability requires dt <= dr; at dt = dr the scheme
transports free waves exactly, which the finite-speed tests exploit.

One-period maps are probed two ways: power iteration with a two-vector
recurrence fit (so complex-conjugate dominant pairs are resolved), and
a direct growth-rate fit of log norms at period ends.  When no mode
dominates, the magnitude estimate falls back on the growth of the
integrator's exactly conserved quadratic form, which is 1 to rounding
for time-frozen coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .potentials import Potential, smooth_step
from .states import RadialGrid, State, inner1, random_state

CFL_SLACK = 1.0 + 1e-9


class CflError(ValueError):
    """Raised when dt exceeds the grid spacing."""


def _check_cfl(dt: float, grid: RadialGrid):
    if dt <= 0:
        raise CflError("dt must be positive")
    if dt > grid.dr * CFL_SLACK:
        raise CflError(f"CFL violated: dt = {dt:.6g} exceeds dr = {grid.dr:.6g}")


def _laplacian(v: np.ndarray, dr2: float) -> np.ndarray:
    # zero ghost at r = 0; wall node carries no dynamics
    out = np.empty_like(v)
    out[0] = (v[1] - 2.0 * v[0]) / dr2
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / dr2
    out[-1] = 0.0
    return out


def _kick_drift_kick(v, w, q_now, q_next, h, dr2):
    a0 = _laplacian(v, dr2) - q_now * v
    a0[-1] = 0.0
    w_half = w + (0.5 * h) * a0
    v = v + h * w_half
    v[-1] = 0.0
    a1 = _laplacian(v, dr2) - q_next * v
    a1[-1] = 0.0
    w = w_half + (0.5 * h) * a1
    w[-1] = 0.0
    return v, w


def _run_sampled(v, w, sampler, t0: float, steps: int, dt: float, dr: float,
                 final_dt: float | None = None, store=None):
    dr2 = dr * dr
    q_now = sampler(t0)
    if store is not None:
        store(0, v, w)
    for k in range(steps):
        h = dt if (final_dt is None or k < steps - 1) else final_dt
        t_next = t0 + (k + 1) * dt if final_dt is None or k < steps - 1 else t0 + k * dt + final_dt
        q_next = sampler(t_next)
        v, w = _kick_drift_kick(v, w, q_now, q_next, h, dr2)
        q_now = q_next
        if store is not None:
            store(k + 1, v, w)
    return v, w


def step_linear(state: State, potential: Potential, t: float, dt: float) -> State:
    """One leapfrog step of v_tt = v_rr - q v from time t."""
    _check_cfl(dt, state.grid)
    sampler = potential.on_grid(state.grid.nodes)
    v, w = _run_sampled(state.v.copy(), state.w.copy(), sampler, t, 1, dt, state.grid.dr)
    return State(v, w, state.grid)


def propagate(state: State, potential: Potential, t0: float, t1: float, dt: float) -> State:
    """Advance from t0 to t1: ceil((t1 - t0)/dt) steps, final step shortened."""
    _check_cfl(dt, state.grid)
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    span = t1 - t0
    if span == 0.0:
        return state.copy()
    steps = max(1, math.ceil(span / dt - 1e-12))
    final_dt = span - (steps - 1) * dt
    sampler = potential.on_grid(state.grid.nodes)
    v, w = _run_sampled(state.v.copy(), state.w.copy(), sampler, t0, steps, dt,
                        state.grid.dr, final_dt=final_dt)
    return State(v, w, state.grid)


def _period_steps(T: float, dt: float) -> tuple[int, float]:
    # snap to a whole number of steps per period so period maps compose exactly
    steps = max(1, math.ceil(T / dt - 1e-12))
    return steps, T / steps


def period_map(potential: Potential, grid: RadialGrid, dt: float) -> Callable[[State], State]:
    """One-period linear propagator with dt snapped to divide the period."""
    _check_cfl(dt, grid)
    steps, h = _period_steps(potential.period, dt)
    sampler = potential.on_grid(grid.nodes)

    def apply(state: State) -> State:
        v, w = _run_sampled(state.v.copy(), state.w.copy(), sampler, 0.0, steps, h, grid.dr)
        return State(v, w, grid)

    return apply


def interior_propagate(state: State, forcing: Callable[[float], float], t0: float, t1: float,
                       dt: float, delta: float | None = None) -> State:
    """Propagate on the core ball alone: Dirichlet walls at r = 0 and
    r = r_max, uniform forcing q(t) through an optional edge cutoff.

    With delta = None the forcing multiplies the whole ball, which is the
    grid realization of the scalar Hill dynamics mode by mode.  A set
    delta is widened to at least two grid cells.
    """
    _check_cfl(dt, state.grid)
    grid = state.grid
    if delta is None:
        chi = np.ones(grid.n)
        chi[-1] = 0.0
    else:
        delta_eff = max(delta, 2.0 * grid.dr)
        chi = smooth_step((grid.r_max - grid.nodes) / delta_eff)
    sampler = lambda t: forcing(t) * chi
    span = t1 - t0
    if span <= 0:
        return state.copy()
    steps = max(1, math.ceil(span / dt - 1e-12))
    final_dt = span - (steps - 1) * dt
    v, w = _run_sampled(state.v.copy(), state.w.copy(), sampler, t0, steps, dt,
                        grid.dr, final_dt=final_dt)
    return State(v, w, grid)


def duhamel_residual(state: State, potential: Potential, horizon: float, dt: float) -> float:
    """Defect of the propagator splitting

        (with-potential run) - (free run)
            = - sum over steps of (free-propagated potential kicks)

    with the right side assembled by trapezoid quadrature over the stored
    with-potential trajectory.  O(dt^2); used as a solver self-test.
    """
    _check_cfl(dt, state.grid)
    grid = state.grid
    steps, h = _period_steps(horizon, dt)
    sampler = potential.on_grid(grid.nodes)
    zero = lambda t: 0.0 * grid.nodes

    traj = np.empty((steps + 1, grid.n), dtype=state.v.dtype)
    store = lambda k, v, w: traj.__setitem__(k, v)
    v1, w1 = _run_sampled(state.v.copy(), state.w.copy(), sampler, 0.0, steps, h, grid.dr,
                          store=store)
    v0, w0 = _run_sampled(state.v.copy(), state.w.copy(), zero, 0.0, steps, h, grid.dr)
    lhs = State(v1 - v0, w1 - w0, grid)

    acc_v = np.zeros(grid.n, dtype=state.v.dtype)
    acc_w = np.zeros(grid.n, dtype=state.v.dtype)
    for k in range(steps + 1):
        tau = k * h
        weight = 0.5 * h if k in (0, steps) else h
        src_v = np.zeros(grid.n, dtype=state.v.dtype)
        src_w = sampler(tau) * traj[k]
        if k < steps:
            src_v, src_w = _run_sampled(src_v, src_w, zero, tau, steps - k, h, grid.dr)
        acc_v += weight * src_v
        acc_w += weight * src_w
    rhs = State(-acc_v, -acc_w, grid)
    return (lhs - rhs).norm0()


# ---------------------------------------------------------------------------
# one-period spectral probes


@dataclass
class FloquetResult:
    magnitude: float
    eigenvalue: complex
    residual: float
    iterations: int
    eigenstate: State
    converged: bool


def _conserved_form(state: State, q0: np.ndarray, dt: float) -> float:
    # quadratic form exactly invariant under the leapfrog step for frozen
    # coefficients: |w|^2 + <Bv, v> - (dt^2/4)|Bv|^2, B = -lap + q
    grid = state.grid
    bv = -_laplacian(state.v, grid.dr**2) + q0 * state.v
    bv[-1] = 0.0
    val = (np.sum(np.abs(state.w) ** 2)
           + np.real(np.vdot(state.v, bv))
           - 0.25 * dt * dt * np.sum(np.abs(bv) ** 2))
    return float(val) * grid.dr


def _recurrence_fit(x0: State, x1: State, x2: State):
    # least-squares s1, s0 with x2 ~ s1 x1 + s0 x0
    g11 = inner1(x1, x1)
    g10 = inner1(x1, x0)
    g00 = inner1(x0, x0)
    gram = np.array([[g11, g10], [np.conj(g10), g00]])
    rhs = np.array([inner1(x1, x2), inner1(x0, x2)])
    det = gram[0, 0] * gram[1, 1] - gram[0, 1] * gram[1, 0]
    if abs(det) < 1e-13 * abs(g11) * abs(g00) + 1e-300:
        return None
    sol = np.linalg.solve(gram, rhs)
    s1, s0 = complex(sol[0]), complex(sol[1])
    roots = np.roots([1.0, -s1, -s0])
    lam = roots[np.argmax(np.abs(roots))]
    resid = x2 - s1 * x1 - s0 * x0
    phi = x1 - np.conj(lam) * x0
    phi_norm = phi.norm1()
    if phi_norm < 1e-12 * x1.norm1():
        return None
    return complex(lam), resid.norm1() / phi_norm


def dominant_eigenvalue(potential: Potential, dt: float, grid: RadialGrid,
                        start: State | None = None, max_iter: int = 200,
                        tol: float = 1e-6, seed: int = 0) -> FloquetResult:
    """Dominant eigenvalue of the one-period map by power iteration.

    Iterates are normalized in the norm1 energy norm.  A simple Rayleigh
    quotient handles a real dominant eigenvalue; a two-vector recurrence
    fit resolves complex-conjugate pairs.  Residual is
    |map(phi) - y phi|_1 / |phi|_1 for the best candidate phi.  Without
    convergence the returned magnitude is the geometric mean growth of
    the integrator's conserved quadratic form, which cannot exceed 1 for
    time-frozen coefficients.
    """
    apply = period_map(potential, grid, dt)
    steps, h = _period_steps(potential.period, dt)
    q0 = potential.on_grid(grid.nodes)(0.0)

    if start is None:
        x = random_state(grid, np.random.default_rng(seed))
    else:
        x = start.copy()
    nx = x.norm1()
    if nx == 0:
        raise ValueError("start state must be nonzero")
    x = (1.0 / nx) * x

    x_prev: State | None = None
    g_prev = 1.0
    log_gains: list[float] = []
    best_res = np.inf
    best_eig: complex = 0j
    for it in range(1, max_iter + 1):
        y = apply(x)
        c_x = _conserved_form(x, q0, h)
        c_y = _conserved_form(y, q0, h)
        if c_x > 0 and c_y > 0:
            log_gains.append(0.5 * (np.log(c_y) - np.log(c_x)))

        lam_r = inner1(x, y)
        res_r = (y - lam_r * x).norm1()
        if res_r < best_res:
            best_res, best_eig = res_r, complex(lam_r)
        if res_r < tol:
            return FloquetResult(magnitude=abs(lam_r), eigenvalue=complex(lam_r),
                                 residual=res_r, iterations=it, eigenstate=x,
                                 converged=True)
        if x_prev is not None:
            fit = _recurrence_fit(x_prev, g_prev * x, g_prev * y)
            if fit is not None:
                lam_p, res_p = fit
                if res_p < best_res:
                    best_res, best_eig = res_p, lam_p
                if res_p < tol:
                    return FloquetResult(magnitude=abs(lam_p), eigenvalue=lam_p,
                                         residual=res_p, iterations=it, eigenstate=x,
                                         converged=True)
        g = y.norm1()
        if g == 0:
            raise ValueError("one-period map annihilated the iterate")
        x_prev, g_prev = x, g
        x = (1.0 / g) * y

    tail = log_gains[len(log_gains) // 2:]
    if tail:
        magnitude = float(np.exp(np.mean(tail)))
    else:
        magnitude = abs(best_eig)
    phase = best_eig / abs(best_eig) if abs(best_eig) > 0 else 1.0
    return FloquetResult(magnitude=magnitude, eigenvalue=magnitude * phase,
                         residual=best_res, iterations=max_iter, eigenstate=x,
                         converged=False)


def period_norm_history(potential: Potential, data: State, n_periods: int, dt: float):
    """log norm1 at period ends, with rescale-and-count so huge growth
    factors never overflow.  Returns (times, log_norms)."""
    apply = period_map(potential, data.grid, dt)
    T = potential.period
    state = data.copy()
    n0 = state.norm1()
    if n0 == 0:
        raise ValueError("data must be nonzero")
    offset = 0.0
    times = [0.0]
    logs = [float(np.log(n0))]
    for n in range(1, n_periods + 1):
        state = apply(state)
        nn = state.norm1()
        if nn == 0:
            raise ValueError("state vanished during growth run")
        if nn > 1e100 or nn < 1e-100:
            offset += float(np.log(nn))
            state = (1.0 / nn) * state
            logs.append(offset)
        else:
            logs.append(offset + float(np.log(nn)))
        times.append(n * T)
    return np.asarray(times), np.asarray(logs)


def growth_rate(potential: Potential, data: State, n_periods: int, dt: float) -> float:
    """Exponential rate from the least-squares slope of log norm1 at
    period ends, fitted over the last half of the run."""
    if n_periods < 4:
        raise ValueError("need at least 4 periods for a slope")
    times, logs = period_norm_history(potential, data, n_periods, dt)
    i0 = len(times) // 2
    slope = np.polyfit(times[i0:], logs[i0:], 1)[0]
    return float(slope)

"""Hill equations and Floquet multipliers.

The scalar problem is T'' + (omega_sq + q(t)) T = 0 with q periodic.
The monodromy matrix is integrated over one period with classical RK4;
its trace decides stability (|trace| > 2 means a real multiplier pair
with one root outside the unit circle).  Radial Dirichlet modes of a
ball reduce to this problem, which is how unstable modes are selected
for the shell-confined wave runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .potentials import BarrierSpec

# strict instability margin: |trace| must clear 2 by more than this
TRACE_MARGIN = 1e-12


@dataclass(frozen=True)
class HillProblem:
    """T'' + (omega_sq + forcing(t)) T = 0, forcing periodic with `period`."""

    omega_sq: float
    forcing: Callable[[float], float]
    period: float

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.omega_sq < 0:
            raise ValueError("omega_sq must be nonnegative")


@dataclass(frozen=True)
class Monodromy:
    """Fundamental solution over one period, with det drift as error tag."""

    matrix: np.ndarray
    steps: int
    est_error: float  # |det - 1|; Liouville says det == 1 exactly


class FloquetPair(NamedTuple):
    mu1: complex
    mu2: complex
    trace: float
    unstable: bool


class ModeSelection(NamedTuple):
    k: int
    omega_sq: float
    pair: FloquetPair


def _rk4_system(coeff: Callable[[float], float], period: float, steps: int) -> np.ndarray:
    """Integrate Y' = A(t) Y, A = [[0, 1], [-coeff(t), 0]], Y(0) = I."""
    y = np.eye(2)
    h = period / steps

    def rhs(t, m):
        top = m[1]
        bot = -coeff(t) * m[0]
        return np.array([top, bot])

    t = 0.0
    for _ in range(steps):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return y


def monodromy(problem: HillProblem, steps: int = 256) -> Monodromy:
    """Monodromy matrix of the Hill problem (RK4, fixed step).

    Columns are the solutions with data (1, 0) and (0, 1); both are
    integrated at once.  est_error reports |det - 1|.
    """
    if steps < 4:
        raise ValueError("need at least 4 RK4 steps")
    coeff = lambda t: problem.omega_sq + problem.forcing(t)
    m = _rk4_system(coeff, problem.period, steps)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return Monodromy(matrix=m, steps=steps, est_error=abs(det - 1.0))


def multipliers(mono: Monodromy, det_tol: float = 1e-6) -> FloquetPair:
    """Floquet multipliers as roots of lambda^2 - trace * lambda + 1.

    The unit constant term uses Liouville's theorem; a det drift above
    det_tol means the matrix cannot be trusted and is rejected.
    """
    if mono.est_error > det_tol:
        raise ValueError(f"monodromy det drift {mono.est_error:.3e} exceeds {det_tol:.1e}")
    tr = float(mono.matrix[0, 0] + mono.matrix[1, 1])
    disc = tr * tr - 4.0
    if disc >= 0:
        root = np.sqrt(disc)
        mu1 = complex((tr + root) / 2.0)
        mu2 = complex((tr - root) / 2.0)
    else:
        root = np.sqrt(-disc)
        mu1 = complex(tr / 2.0, root / 2.0)
        mu2 = complex(tr / 2.0, -root / 2.0)
    unstable = abs(tr) > 2.0 + TRACE_MARGIN
    return FloquetPair(mu1=mu1, mu2=mu2, trace=tr, unstable=unstable)


class TonguePoint(NamedTuple):
    omega_sq: float
    trace: float
    max_multiplier: float
    unstable: bool


def tongue_scan(forcing: Callable[[float], float], period: float,
                omega_sq_values: np.ndarray, steps: int = 512) -> list[TonguePoint]:
    """Stability scan of omega_sq at fixed forcing.

    Returns one point per omega_sq with the trace, the larger multiplier
    modulus, and the instability flag.
    """
    points = []
    for osq in np.asarray(omega_sq_values, dtype=float):
        prob = HillProblem(omega_sq=float(osq), forcing=forcing, period=period)
        pair = multipliers(monodromy(prob, steps=steps))
        points.append(TonguePoint(
            omega_sq=float(osq),
            trace=pair.trace,
            max_multiplier=max(abs(pair.mu1), abs(pair.mu2)),
            unstable=pair.unstable,
        ))
    return points


def unstable_intervals(points: list[TonguePoint]) -> list[tuple[float, float]]:
    """Contiguous unstable runs of a scan as (omega_sq_lo, omega_sq_hi)."""
    intervals = []
    start = None
    for p in points:
        if p.unstable and start is None:
            start = p.omega_sq
        elif not p.unstable and start is not None:
            intervals.append((start, prev.omega_sq))
            start = None
        prev = p
    if start is not None:
        intervals.append((start, points[-1].omega_sq))
    return intervals


def pick_unstable_mode(spec: BarrierSpec, k_max: int, steps: int = 1024) -> ModeSelection | None:
    """Smallest radial Dirichlet mode of the core ball that the periodic
    forcing destabilizes.

    Mode k has omega_sq = (k pi / L)^2; returns None when no mode up to
    k_max is unstable (caller adjusts the radius or the forcing).
    """
    L = spec.inner_radius
    for k in range(1, k_max + 1):
        osq = (k * np.pi / L) ** 2
        prob = HillProblem(omega_sq=osq, forcing=spec.hill_profile, period=spec.hill_profile.period)
        pair = multipliers(monodromy(prob, steps=steps))
        if pair.unstable:
            return ModeSelection(k=k, omega_sq=osq, pair=pair)
    return None

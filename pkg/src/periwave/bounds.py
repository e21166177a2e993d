"""Comparison bounds for sublinearly forced energies.

Nonnegative X with |dX/dt| <= C X^(1-gamma), 0 < gamma < 1, satisfies

    X(t) <= ( X(0)^gamma + C gamma t )^(1/gamma),

with equality along dX/dt = +C X^(1-gamma).  Substituting the Hoelder
rate constant of the defocusing wave energy (gamma = r/(r+2)) yields
polynomial-in-time envelopes for the energy, for the first-order norms,
and for the L2 norm of the solution itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class OdeBoundParams:
    gamma: float
    C: float
    X0: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.C < 0.0:
            raise ValueError("C must be nonnegative")
        if self.X0 < 0.0:
            raise ValueError("X0 must be nonnegative")


def comparison_bound(p: OdeBoundParams, t: float) -> float:
    """(X0^gamma + C gamma t)^(1/gamma); rejects negative times."""
    if t < 0:
        raise ValueError("bound is stated for t >= 0")
    return float((p.X0 ** p.gamma + p.C * p.gamma * t) ** (1.0 / p.gamma))


def comparison_falsify(p: OdeBoundParams, trials: int = 1000, horizon: float = 10.0,
                       segments: int = 32, rng: np.random.Generator | None = None,
                       eps: float = 1e-12) -> float:
    """Adversarial check of the comparison bound.

    Each trial integrates dX/dt = c(t) X^(1-gamma) for a random
    piecewise-constant c with |c| <= C.  In the variable Y = X^gamma the
    equation is linear segment by segment (dY/dt = gamma c), so the
    integration is exact up to rounding; Y is clamped at zero, which
    realizes the maximal escape from a vanishing state and plays the
    role of the shift-by-eps argument in the limit.  Returns the worst
    (most negative) value over trials and sample times of
    bound(t) - X(t); a correct bound keeps this nonnegative to rounding.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    worst = np.inf
    seg_dt = horizon / segments
    for _ in range(trials):
        c = rng.uniform(-p.C, p.C, size=segments)
        y = p.X0 ** p.gamma
        t = 0.0
        x = max(y, eps) ** (1.0 / p.gamma) if y > 0 else 0.0
        worst = min(worst, comparison_bound(p, 0.0) - p.X0)
        for k in range(segments):
            y = max(0.0, y + p.gamma * c[k] * seg_dt)
            t += seg_dt
            x = y ** (1.0 / p.gamma)
            worst = min(worst, comparison_bound(p, t) - x)
    return float(worst)


class Envelopes(NamedTuple):
    x: float      # bound on the energy X(t)
    norm: float   # bound on |du/dt|_L2 + |grad u|_L2
    l2: float     # bound on |u(t)|_L2 given |u(0)|_L2


def growth_envelopes(X0: float, C: float, r: float, t: float, u0_l2: float = 0.0) -> Envelopes:
    """Polynomial envelopes from the comparison bound with gamma = r/(r+2).

    x    = (X0^(r/(r+2)) + C r/(r+2) t)^((r+2)/r)
    norm = 2 (same base)^((r+2)/(2r))
    l2   = u0_l2 + 2 t (same base)^((r+2)/(2r))
    """
    if t < 0:
        raise ValueError("envelopes are stated for t >= 0")
    gamma = r / (r + 2.0)
    base = X0 ** gamma + C * gamma * t
    x = base ** (1.0 / gamma)
    half = base ** ((r + 2.0) / (2.0 * r))
    return Envelopes(x=float(x), norm=float(2.0 * half), l2=float(u0_l2 + 2.0 * t * half))


# Energies computed from a synchronized leapfrog state carry an O(dt^2)
# oscillation around the exact value, so envelope comparisons need a
# relative slack at the level the scheme conserves static energies.
SCHEME_REL_TOL = 1e-6


def count_violations(values, envelope, rel_tol: float = SCHEME_REL_TOL,
                     abs_tol: float = 1e-12) -> int:
    """Number of samples where values exceed envelope beyond tolerance."""
    v = np.asarray(values, dtype=float)
    e = np.asarray(envelope, dtype=float)
    if v.shape != e.shape:
        raise ValueError("values and envelope must have matching shapes")
    return int(np.sum(v > e * (1.0 + rel_tol) + abs_tol))

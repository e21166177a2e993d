"""Reference configurations used by the test corpus and the CLI defaults.

The in-house forcing is q(t) = a + b cos(2 pi t / T): nonnegative for
a >= b >= 0 and analytically differentiable.  The reference shell spec
places the first radial Dirichlet mode of the core at the center of the
principal parametric resonance: with T = pi the scalar problem for mode
k is a Mathieu equation whose first tongue sits at omega_sq + a = 1, so
L = pi sqrt(2) together with a = b = 1/2 puts k = 1 exactly on center
while k >= 2 stays far inside stable gaps.
"""

from __future__ import annotations

import numpy as np

from .potentials import (BarrierSpec, CosineProfile, ConstantProfile, PlateauProfile,
                         Potential, SeparablePotential, SmoothBumpProfile, ZeroPotential,
                         build_barrier)
from .states import RadialGrid

REFERENCE_PERIOD = np.pi
REFERENCE_CORE_RADIUS = np.pi * np.sqrt(2.0)


def reference_forcing(mean: float = 0.5, amplitude: float = 0.5,
                      period: float = REFERENCE_PERIOD) -> CosineProfile:
    return CosineProfile(mean=mean, amplitude=amplitude, period=period)


def reference_barrier_spec(epsilon: float = 0.05) -> BarrierSpec:
    return BarrierSpec(inner_radius=REFERENCE_CORE_RADIUS, epsilon=epsilon,
                       hill_profile=reference_forcing())


def reference_barrier(epsilon: float = 0.05):
    return build_barrier(reference_barrier_spec(epsilon))


def reference_grid(r_max: float = 7.0, n: int = 1400) -> RadialGrid:
    # dr = 0.005 resolves the epsilon = 0.05 shell ramps with 10 cells
    return RadialGrid(r_max=r_max, n=n)


def reference_dt(grid: RadialGrid | None = None) -> float:
    grid = grid or reference_grid()
    # snapped by the period maps to an exact divisor of the period
    return 0.5 * grid.dr


def static_bump(height: float = 1.0, radius: float = 2.0, period: float = REFERENCE_PERIOD) -> SeparablePotential:
    return SeparablePotential(ConstantProfile(value=height, period=period),
                              SmoothBumpProfile(radius=radius))


def breathing_bump(mean: float = 1.0, amplitude: float = 0.8, radius: float = 2.0,
                   period: float = REFERENCE_PERIOD) -> SeparablePotential:
    return SeparablePotential(CosineProfile(mean=mean, amplitude=amplitude, period=period),
                              SmoothBumpProfile(radius=radius))


def breathing_plateau(mean: float = 2.0, amplitude: float = 2.0, radius: float = 2.5,
                      edge: float = 0.8, period: float = REFERENCE_PERIOD) -> SeparablePotential:
    return SeparablePotential(CosineProfile(mean=mean, amplitude=amplitude, period=period),
                              PlateauProfile(radius=radius, edge=edge))


def corpus_potentials() -> list[tuple[str, Potential]]:
    """The five potentials the envelope corpus runs against."""
    return [
        ("zero", ZeroPotential(period=REFERENCE_PERIOD)),
        ("static-bump", static_bump()),
        ("breathing-bump", breathing_bump()),
        ("breathing-plateau", breathing_plateau()),
        ("shell-core", reference_barrier()),
    ]

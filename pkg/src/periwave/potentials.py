"""Time-periodic, compactly supported radial potentials.

Potentials are immutable evaluators q(t, r) built from a periodic time
profile and a compactly supported space profile.  Beyond the separable
product form there is a barrier potential (a tall smooth shell enclosing
a uniformly forced core) and a multi-term collection used by the
mixed-power nonlinear solver.  All constructions are smooth in r and
exactly zero outside their support radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

FOUR_PI = 4.0 * np.pi


class SpecError(ValueError):
    """Raised when a potential or run specification is inconsistent."""


# ---------------------------------------------------------------------------
# smooth building blocks


def _exp_ramp(x: np.ndarray) -> np.ndarray:
    # exp(-1/x) for x > 0, identically 0 for x <= 0; C-inf at the seam
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x) -> np.ndarray:
    """C-inf monotone step: exactly 0 for x <= 0 and exactly 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = _exp_ramp(x)
    b = _exp_ramp(1.0 - x)
    out = np.zeros_like(x)
    inside = (x > 0) & (x < 1)
    out[inside] = a[inside] / (a[inside] + b[inside])
    out[x >= 1] = 1.0
    return out


def smooth_bump(x) -> np.ndarray:
    """C-inf bump on (-1, 1): value 1 at x = 0, exactly 0 for |x| >= 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    xi = x[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - xi * xi))
    return out


# ---------------------------------------------------------------------------
# time profiles


def _check_period(period: float) -> None:
    if not period > 0:
        raise SpecError("profile period must be positive")


class TimeProfile:
    """Periodic scalar profile a(t).  Subclasses supply value and derivative."""

    period: float

    def __post_init__(self):
        _check_period(self.period)

    def __call__(self, t: float) -> float:
        raise NotImplementedError

    def derivative(self, t: float) -> float:
        # central difference fallback; analytic overrides preferred
        h = 1e-6 * self.period
        return (self(t + h) - self(t - h)) / (2.0 * h)

    def max_abs(self, samples: int = 4096) -> float:
        ts = np.linspace(0.0, self.period, samples, endpoint=False)
        return float(max(abs(self(t)) for t in ts))

    def max_abs_derivative(self, samples: int = 4096) -> float:
        ts = np.linspace(0.0, self.period, samples, endpoint=False)
        return float(max(abs(self.derivative(t)) for t in ts))

    def min_value(self, samples: int = 4096) -> float:
        ts = np.linspace(0.0, self.period, samples, endpoint=False)
        return float(min(self(t) for t in ts))


@dataclass(frozen=True)
class ConstantProfile(TimeProfile):
    value: float
    period: float = 1.0

    def __call__(self, t: float) -> float:
        return self.value

    def derivative(self, t: float) -> float:
        return 0.0

    def max_abs_derivative(self, samples: int = 0) -> float:
        return 0.0


@dataclass(frozen=True)
class CosineProfile(TimeProfile):
    """a(t) = mean + amplitude * cos(2 pi t / period)."""

    mean: float
    amplitude: float
    period: float

    def __call__(self, t: float) -> float:
        return self.mean + self.amplitude * np.cos(2.0 * np.pi * t / self.period)

    def derivative(self, t: float) -> float:
        om = 2.0 * np.pi / self.period
        return -self.amplitude * om * np.sin(om * t)

    def max_abs_derivative(self, samples: int = 0) -> float:
        return abs(self.amplitude) * 2.0 * np.pi / self.period

    def min_value(self, samples: int = 0) -> float:
        return self.mean - abs(self.amplitude)


@dataclass(frozen=True)
class CallableProfile(TimeProfile):
    """Wrap a raw callable.  No periodization is applied: if the callable is
    not actually periodic the defect is observable via periodicity_defect."""

    fn: Callable[[float], float]
    period: float

    def __call__(self, t: float) -> float:
        return float(self.fn(t))


class SampledProfile(TimeProfile):
    """Periodic cubic spline through samples on [0, period)."""

    def __init__(self, times: Sequence[float], values: Sequence[float], period: float):
        from scipy.interpolate import CubicSpline

        _check_period(period)

        t = np.asarray(times, dtype=float)
        y = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != y.shape or t.size < 3:
            raise SpecError("sampled profile needs matching 1-d times/values, >= 3 samples")
        if t[0] != 0.0 or t[-1] >= period:
            raise SpecError("sample times must start at 0 and stay below the period")
        if np.any(np.diff(t) <= 0):
            raise SpecError("sample times must be strictly increasing")
        tc = np.concatenate([t, [period]])
        yc = np.concatenate([y, [y[0]]])
        self.period = float(period)
        self._spline = CubicSpline(tc, yc, bc_type="periodic")
        self._dspline = self._spline.derivative()

    def __call__(self, t: float) -> float:
        out = self._spline(np.mod(t, self.period))
        return float(out) if np.ndim(t) == 0 else out

    def derivative(self, t: float) -> float:
        out = self._dspline(np.mod(t, self.period))
        return float(out) if np.ndim(t) == 0 else out


# ---------------------------------------------------------------------------
# space profiles


@dataclass(frozen=True)
class SmoothBumpProfile:
    """Radial C-inf bump: 1 at r = 0, exactly 0 for r >= radius."""

    radius: float

    def __call__(self, r) -> np.ndarray:
        return smooth_bump(np.asarray(r, dtype=float) / self.radius)


@dataclass(frozen=True)
class PlateauProfile:
    """Exactly 1 on [0, radius - edge], smooth ramp to exactly 0 at radius."""

    radius: float
    edge: float

    def __post_init__(self):
        if not 0 < self.edge <= self.radius:
            raise SpecError("plateau edge must satisfy 0 < edge <= radius")

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return smooth_step((self.radius - r) / self.edge)


# ---------------------------------------------------------------------------
# potentials


class Potential:
    """Base evaluator for q(t, r).

    Attributes
    ----------
    period : float
        Time period T with q(t + T, r) = q(t, r).
    support_radius : float
        rho with q(t, r) = 0 for all r >= rho.
    """

    period: float
    support_radius: float

    def __call__(self, t: float, r) -> np.ndarray:
        raise NotImplementedError

    def dt(self, t: float, r) -> np.ndarray:
        """Time derivative of q; finite-difference fallback."""
        h = 1e-6 * self.period
        return (self(t + h, r) - self(t - h, r)) / (2.0 * h)

    def on_grid(self, r: np.ndarray) -> Callable[[float], np.ndarray]:
        """Return t -> q(t, r_nodes) with spatial factors precomputed."""
        r = np.array(r, dtype=float, copy=True)
        return lambda t: np.asarray(self(t, r), dtype=float)

    def dt_on_grid(self, r: np.ndarray) -> Callable[[float], np.ndarray]:
        r = np.array(r, dtype=float, copy=True)
        return lambda t: np.asarray(self.dt(t, r), dtype=float)

    def max_time_derivative(self, time_samples: int = 4096, r_samples: int = 2048) -> float:
        """sup over t and r of |dq/dt| (sampled)."""
        rs = np.linspace(0.0, self.support_radius, r_samples)
        ts = np.linspace(0.0, self.period, time_samples, endpoint=False)
        return float(max(np.max(np.abs(self.dt(t, rs))) for t in ts))


class ZeroPotential(Potential):
    def __init__(self, period: float = 1.0):
        self.period = float(period)
        self.support_radius = 0.0

    def __call__(self, t: float, r) -> np.ndarray:
        return np.zeros_like(np.asarray(r, dtype=float))

    def dt(self, t: float, r) -> np.ndarray:
        return np.zeros_like(np.asarray(r, dtype=float))

    def max_time_derivative(self, time_samples: int = 0, r_samples: int = 0) -> float:
        return 0.0


class SeparablePotential(Potential):
    """q(t, r) = a(t) * s(r) with a periodic and s compactly supported.

    The product must be nonnegative (defocusing setting): construction
    rejects profiles whose sampled minimum is negative.
    """

    def __init__(self, time_profile: TimeProfile, space_profile, support_radius: float | None = None):
        self.time_profile = time_profile
        self.space_profile = space_profile
        self.period = float(time_profile.period)
        if support_radius is None:
            support_radius = space_profile.radius
        self.support_radius = float(support_radius)
        if self.period <= 0:
            raise SpecError("period must be positive")
        if self.support_radius <= 0:
            raise SpecError("support radius must be positive")
        if time_profile.min_value() < -1e-12:
            raise SpecError("time profile dips negative; potential must stay >= 0")
        rs = np.linspace(0.0, self.support_radius, 512)
        if np.min(space_profile(rs)) < -1e-12:
            raise SpecError("space profile dips negative; potential must stay >= 0")

    def __call__(self, t: float, r) -> np.ndarray:
        return self.time_profile(t) * self.space_profile(np.asarray(r, dtype=float))

    def dt(self, t: float, r) -> np.ndarray:
        return self.time_profile.derivative(t) * self.space_profile(np.asarray(r, dtype=float))

    def on_grid(self, r: np.ndarray) -> Callable[[float], np.ndarray]:
        s = np.asarray(self.space_profile(np.asarray(r, dtype=float)), dtype=float)
        a = self.time_profile
        return lambda t: a(t) * s

    def dt_on_grid(self, r: np.ndarray) -> Callable[[float], np.ndarray]:
        s = np.asarray(self.space_profile(np.asarray(r, dtype=float)), dtype=float)
        a = self.time_profile
        return lambda t: a.derivative(t) * s

    def max_time_derivative(self, time_samples: int = 4096, r_samples: int = 2048) -> float:
        rs = np.linspace(0.0, self.support_radius, r_samples)
        smax = float(np.max(self.space_profile(rs)))
        return self.time_profile.max_abs_derivative(time_samples) * smax


@dataclass(frozen=True)
class BarrierSpec:
    """Shell-plus-core potential: a static barrier of height 1/epsilon
    supported on [inner_radius, inner_radius + 1] around a core where a
    periodic uniform forcing acts through a smooth cutoff.

    Fields
    ------
    inner_radius : L, radius of the forced core (shell sits on [L, L+1]).
    epsilon     : barrier parameter; height 1/epsilon, plateau exactly
                  1/epsilon on [L+eps, L+1-eps], smooth ramps of width eps.
    hill_profile: periodic forcing q(t) >= 0 acting inside the core.
    delta       : cutoff width; the core factor is exactly 1 for
                  r <= L - delta and exactly 0 for r >= L.  Defaults to
                  0.05 * L when not set.
    """

    inner_radius: float
    epsilon: float
    hill_profile: TimeProfile
    delta: float | None = None

    def resolved_delta(self) -> float:
        return 0.05 * self.inner_radius if self.delta is None else self.delta


class BarrierPotential(Potential):
    """q(t, r) = barrier(r) + a(t) * cutoff(r); support radius L + 1."""

    def __init__(self, spec: BarrierSpec):
        L, eps = spec.inner_radius, spec.epsilon
        delta = spec.resolved_delta()
        if L <= 0:
            raise SpecError("inner radius must be positive")
        if not 0 < eps < 0.5:
            raise SpecError("barrier epsilon must lie in (0, 1/2)")
        if not 0 < delta < L:
            raise SpecError("cutoff delta must lie in (0, inner_radius)")
        if spec.hill_profile.min_value() < -1e-12:
            raise SpecError("core forcing must stay >= 0")
        self.spec = spec
        self.delta = delta
        self.period = float(spec.hill_profile.period)
        self.support_radius = L + 1.0

    def barrier_profile(self, r) -> np.ndarray:
        """Static shell: 0 outside [L, L+1], exactly 1/eps on the plateau."""
        L, eps = self.spec.inner_radius, self.spec.epsilon
        r = np.asarray(r, dtype=float)
        up = smooth_step((r - L) / eps)
        down = smooth_step((L + 1.0 - r) / eps)
        return (up * down) / eps

    def cutoff_profile(self, r) -> np.ndarray:
        """Core factor: exactly 1 for r <= L - delta, exactly 0 for r >= L."""
        L = self.spec.inner_radius
        r = np.asarray(r, dtype=float)
        return smooth_step((L - r) / self.delta)

    def __call__(self, t: float, r) -> np.ndarray:
        return self.barrier_profile(r) + self.spec.hill_profile(t) * self.cutoff_profile(r)

    def dt(self, t: float, r) -> np.ndarray:
        return self.spec.hill_profile.derivative(t) * self.cutoff_profile(r)

    def on_grid(self, r: np.ndarray) -> Callable[[float], np.ndarray]:
        b = self.barrier_profile(r)
        chi = self.cutoff_profile(r)
        a = self.spec.hill_profile
        return lambda t: b + a(t) * chi

    def dt_on_grid(self, r: np.ndarray) -> Callable[[float], np.ndarray]:
        chi = self.cutoff_profile(r)
        a = self.spec.hill_profile
        return lambda t: a.derivative(t) * chi

    def max_time_derivative(self, time_samples: int = 4096, r_samples: int = 0) -> float:
        # cutoff peaks at exactly 1
        return self.spec.hill_profile.max_abs_derivative(time_samples)


def build_barrier(spec: BarrierSpec) -> BarrierPotential:
    """Construct the shell-plus-core potential, validating the spec."""
    return BarrierPotential(spec)


@dataclass(frozen=True)
class MultiTermSpec:
    """Collection q_j(t, r) |u|^j u for 0 <= j <= leading_exponent - 1,
    alongside the leading defocusing power |u|^r u with r = leading_exponent.
    """

    leading_exponent: int
    terms: tuple[tuple[int, Potential], ...] = field(default_factory=tuple)

    def __post_init__(self):
        r = self.leading_exponent
        if r not in (2, 3):
            raise SpecError("leading exponent must be 2 or 3")
        seen = set()
        for j, pot in self.terms:
            if not 0 <= j <= r - 1:
                raise SpecError(f"term exponent {j} outside 0..{r - 1}")
            if j in seen:
                raise SpecError(f"duplicate term exponent {j}")
            seen.add(j)
            if not isinstance(pot, Potential):
                raise SpecError("each term needs a Potential instance")


# ---------------------------------------------------------------------------
# module-level operations


def eval_potential(potential: Potential, t: float, r):
    """Evaluate q(t, r); rejects negative radii, exact 0 beyond support."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise SpecError("radius must be nonnegative")
    out = potential(t, arr)
    if np.isscalar(r) or np.asarray(r).ndim == 0:
        return float(out)
    return out


def periodicity_defect(potential: Potential, time_samples: int = 64, r_samples: int = 33) -> float:
    """max |q(t + T, r) - q(t, r)| over a sample grid.

    Zero (to rounding) for honestly periodic profiles; raw callables that
    fail to repeat show their defect here.
    """
    ts = np.linspace(0.0, potential.period, time_samples, endpoint=False)
    rs = np.linspace(0.0, max(potential.support_radius, 1e-12), r_samples)
    worst = 0.0
    for t in ts:
        d = np.max(np.abs(potential(t + potential.period, rs) - potential(t, rs)))
        worst = max(worst, float(d))
    return worst


# ---------------------------------------------------------------------------
# JSON descriptors


def time_profile_from_dict(d: dict, period: float | None = None) -> TimeProfile:
    kind = d.get("type")
    if kind == "constant":
        return ConstantProfile(value=float(d["value"]), period=float(d.get("period", period or 1.0)))
    if kind == "cosine":
        return CosineProfile(mean=float(d["mean"]), amplitude=float(d["amplitude"]),
                             period=float(d.get("period", period)))
    if kind == "samples":
        return SampledProfile(d["times"], d["values"], float(d.get("period", period)))
    raise SpecError(f"unknown time profile type: {kind!r}")


def space_profile_from_dict(d: dict):
    kind = d.get("type")
    if kind == "bump":
        return SmoothBumpProfile(radius=float(d["radius"]))
    if kind == "plateau":
        return PlateauProfile(radius=float(d["radius"]), edge=float(d["edge"]))
    raise SpecError(f"unknown space profile type: {kind!r}")


def potential_from_dict(d: dict) -> Potential | MultiTermSpec:
    """Build a potential (or multi-term collection) from a JSON descriptor."""
    kind = d.get("kind")
    if kind == "zero":
        return ZeroPotential(period=float(d.get("period", 1.0)))
    if kind == "separable":
        period = d.get("period")
        tp = time_profile_from_dict(d["time_profile"], period=period)
        sp = space_profile_from_dict(d["space_profile"])
        return SeparablePotential(tp, sp)
    if kind == "barrier":
        tp = time_profile_from_dict(d["hill"], period=d.get("period"))
        spec = BarrierSpec(inner_radius=float(d["inner_radius"]), epsilon=float(d["epsilon"]),
                           hill_profile=tp, delta=d.get("delta"))
        return build_barrier(spec)
    if kind == "multi":
        terms = []
        for item in d["terms"]:
            pot = potential_from_dict(item["potential"])
            if not isinstance(pot, Potential):
                raise SpecError("multi terms cannot nest multi descriptors")
            terms.append((int(item["exponent"]), pot))
        return MultiTermSpec(leading_exponent=int(d["leading_exponent"]), terms=tuple(terms))
    raise SpecError(f"unknown potential kind: {kind!r}")

"""periwave: a numerical laboratory for radial waves driven by
time-periodic, compactly supported potentials, with a defocusing power
nonlinearity.

Linear layer: Hill/Floquet analysis of radial modes, leapfrog
propagation of the reduced string equation, one-period spectral probes.
Nonlinear layer: energy accounting with polynomial growth envelopes,
local fixed-point solves, and instability certificates for the zero
state.
"""

from .bounds import (OdeBoundParams, comparison_bound, comparison_falsify,
                     count_violations, growth_envelopes)
from .hill import (FloquetPair, HillProblem, ModeSelection, Monodromy, TonguePoint,
                   monodromy, multipliers, pick_unstable_mode, tongue_scan,
                   unstable_intervals)
from .instability import (ContrastReport, InstabilityRun, SlopeFit, balance_amplitude,
                          frechet_slope, instability_certificate, monodromy_map,
                          predicted_escape, saturation_contrast)
from .nonlinear import (EnergyReport, NonlinearitySpec, PicardResult, Trajectory,
                        default_local_interval, energy_rate_constant, energy_report,
                        evolve, evolve_multi, multi_rate_constant, picard_oracle,
                        step_nonlinear)
from .potentials import (BarrierPotential, BarrierSpec, CallableProfile, ConstantProfile,
                         CosineProfile, MultiTermSpec, PlateauProfile, Potential,
                         SampledProfile, SeparablePotential, SmoothBumpProfile, SpecError,
                         ZeroPotential, build_barrier, eval_potential, periodicity_defect,
                         potential_from_dict, smooth_bump, smooth_step)
from .radial import (CflError, FloquetResult, dominant_eigenvalue, duhamel_residual,
                     growth_rate, interior_propagate, period_map, propagate, step_linear)
from .states import EnergyNorms, RadialGrid, State, inner1, random_state, zero_state

__version__ = "0.1.0"

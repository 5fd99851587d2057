"""Optical sensor tasking for spacecraft on cislunar periodic orbits.

The package plans which of several observers should look at which of
several targets at each step of an observation schedule, when all
participants ride periodic orbits of the circular restricted three-body
problem and the sensors measure directional cosines.  It provides the
dynamics and state transition machinery, a periodic-orbit catalog,
the measurement model and its information geometry, covariance and
information filters, deformation-based observability analysis, exact
assignment solvers, and a scenario pipeline with file reports.

Figure rendering lives in :mod:`cislunar_tasker.figures` and is imported
lazily by the command line so that library use does not pull in
matplotlib.
"""

__version__ = "0.1.0"

from .dynamics import (Cr3bpParams, EARTH_MOON, IntegratorOptions, Trajectory,
                       jacobi_constant, libration_point, propagate_state,
                       propagate_trajectory)
from .errors import (CislunarError, ConditioningError, ConditioningWarning,
                     CorrectionError, GeometryError, InfeasibleError,
                     PropagationError, SingularityError, ValidationError)
from .filters import (ekf_predict, ekf_update, eif_predict_noiseless,
                      eif_predict_noisy, eif_update, propagate_info_multistep,
                      woodbury_inverse)
from .info_analysis import (BoundsReport, CgtReport, alignment_coefficients,
                            backward_perturbation_samples,
                            deformation_timeseries, left_cgt, theorem1_bounds)
from .measurement import (MeasJacobian, NoiseModel, Observation, RelativeState,
                          info_gain, jacobian_augmented, jacobian_target,
                          null_space_basis, observe, relative_state)
from .orbits import (OrbitFamily, PeriodicOrbit, bundled_catalog, find_orbit,
                     load_catalog, monodromy, orbit_with_period, save_catalog,
                     stability_index, state_at_phase, walk_family)
from .reporting import emit_reports
from .scenario import (OrbitInstance, RunReport, Scenario, analysis_series,
                       load_scenario, parallel_map, run_pipeline)
from .tasking import (ConstraintReport, Schedule, SolveReport, WeightTensor,
                      brute_force_oracle, build_weights, myopic_policy,
                      solve_max_min, solve_max_trace, validate_allocation)

__all__ = [name for name in dir() if not name.startswith("_")]

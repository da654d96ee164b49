"""Gauge transformations for driven quantum many-body Hamiltonians.

Subpackages map one-to-one onto the workflow: :mod:`linalg` (dense kernels),
:mod:`fields` and :mod:`models` (protocols and Hamiltonians), :mod:`gauge`
(the gauge unitaries and their residuals), :mod:`dynamics` (reference and
gauge-mapped propagation), :mod:`freefermion` (the integrable Ising chain)
and :mod:`harness` (configs, suites and the CLI).
"""

from .errors import (CapacityError, ChartError, ConfigError, ContractError, FieldRangeError,
                     GaugeMapError, IntegrationError, PeriodicityError, PreconditionError,
                     ResolutionError, UnsupportedModelError)
from .fields import (ConstantField, LinearRampField, PerSiteField, RotatingField, SampledField,
                     ScaledField, SinusoidalField, protocol_from_dict, random_smooth_field)
from .models import (CouplingGraph, HamiltonianModel, build_fermion, build_heisenberg,
                     build_ising, build_spin_boson)
from .gauge import (GaugeMap, build_gauge_map, flow_equation_residual, gauge_map_residual,
                    gauge_potential, integrate_covariant, integrate_gauss,
                    make_integrable_ising_field, make_ising_field, resolve_phase_sign)
from .dynamics import (aligned_distance, evolve_via_gauge, evolve_with_map, expectation_values,
                       floquet_stroboscopic, propagate_td, propagate_ti, special_state_evolve)

__version__ = "0.1.0"

"""Inverse design for scalar conservation laws with strongly convex flux."""

__version__ = "0.1.0"

from .design import (DesignEnvelope, MembershipVerdict, design, flat_design, flat_via_reversal,
                     membership, sample_design, sharp_design, tv_and_hull_report, write_envelope)
from .estimators import ForwardEvolver, InflowReconstructor, InverseDesign
from .exceptions import (ConstraintInfeasible, DomainError, GlueMismatch, InverseDesignError,
                         NonConvexFluxError, NotReachable, ProfileFormatError, SharpUndefined)
from .flux import (Burgers, FluxModel, LegendreTable, ReflectedFlux, TabulatedFlux, legendre,
                   lower_bound_certificate, make_flux)
from .forward import EvolutionResult, evolve, godunov, hopf_lax
from .localization import (LocalizedTarget, RestrictedDesign, extend_profile,
                           extension_consistency, glue, restricted_design)
from .profile import (Grid, LipschitzProfile, SampledProfile, derivative, l1_distance, primitive,
                      read_profile_csv, resample, total_variation, trace, write_profile_csv)
from .reachability import (ContactSet, OleinikVerdict, PiMap, contact_set, dependency_interval,
                           oleinik_check, pi_map)
from .traffic import (InflowEnvelope, OutflowRecord, SpeedLaw, TrafficFlux, admissible_inflow,
                      detect_events, flux_from_speed, greenshields, inflow_envelope,
                      max_road_length, upstream_window)

"""Thermodynamic formalism on countable Markov shifts, computed through finite truncations."""

from .shifts import (
    CmsSpec, DegenerateTruncation, TruncatedGraph, build_truncation, custom_shift, dump_truncation,
    f_property_check, finite_shift, full_shift, golden_mean, graph_from_edges, higher_block_recode,
    load_truncation, periodic_count, random_finite_shift, renewal_shift, star_shift, subdivide_edges,
    uniform_rome_check,
)
from .potentials import (
    Potential, constant, edge, first_coordinate, indicator, lift_potential, linear_law, log_law,
    penalty, roof_from_ceiling, table, zero,
)
from .measures import (
    CylinderVector, MarkovMeasure, MeasureError, MeasureSequence, Mixture, bernoulli,
    cylinder_distance, escape_sequence, hat_measure, induce_measure, markov_from_matrix,
    mass_loss_diagnostic, mixture, periodic_measure, random_markov, renewal_loop_measure,
    unhat_measure,
)
from .pressure import (
    PressureReport, classify_recurrence, gurevich_estimate, partition_sum, first_return_sum,
    pressure_limit, spectral_pressure, variational_check,
)
from .inducing import build_induced, discriminant, induced_pressure_curve, spr_certificate_induced
from .infinity import (
    InfinityReport, h_of_roof, pressure_at_infinity, restricted_partition_sum, s_infinity,
    semicontinuity_check, spr_test,
)
from .optimization import beta, beta_infinity, optimize, zero_temperature
from .suspension import (
    FlowMeasureView, SuspensionSpec, flow_cylinder_masses, flow_distance, flow_report, flow_spr_test,
    suspension_pressure, suspension_pressure_at_infinity,
)

__version__ = "0.1.0"

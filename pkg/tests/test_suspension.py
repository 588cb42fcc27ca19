import math

import numpy as np
import pytest

from cmsthermo import (
    FlowMeasureView, SuspensionSpec, bernoulli, build_truncation, constant, first_coordinate,
    flow_cylinder_masses, flow_distance, flow_report, flow_spr_test, full_shift, golden_mean,
    indicator, renewal_shift, spectral_pressure, star_shift, suspension_pressure,
    suspension_pressure_at_infinity, zero,
)

LOG2 = math.log(2)


def x1():
    return first_coordinate(lambda i: float(i), vec=lambda s: np.asarray(s, dtype=float),
                            tail=(1.0, 0.0, 0.0), sup_bound=math.inf, name="x1")


def test_constant_roof_two():
    rep = suspension_pressure(SuspensionSpec(full_shift(2), constant(2.0)))
    assert rep.value == pytest.approx(LOG2 / 2, abs=1e-12)


def test_renewal_unit_roof():
    rep = suspension_pressure(SuspensionSpec(renewal_shift(), constant(1.0)))
    assert rep.value == pytest.approx(LOG2, abs=1e-6)


def test_renewal_time_roof_on_full_shift():
    rep = suspension_pressure(SuspensionSpec(full_shift(), x1()))
    assert rep.value == pytest.approx(LOG2, abs=1e-6)


def test_root_residuals_are_small():
    rep = suspension_pressure(SuspensionSpec(build_truncation(golden_mean()), constant(1.0) + indicator((1,))))
    assert abs(rep.diagnostics["root_residual"]) < 1e-9
    # P(-t tau) = 0 at the root
    g = build_truncation(golden_mean())
    assert spectral_pressure(g, -rep.value * (constant(1.0) + indicator((1,)))).value == pytest.approx(0, abs=1e-9)


def test_flow_pressure_decreases_with_roof():
    g = build_truncation(golden_mean())
    vals = [suspension_pressure(SuspensionSpec(g, constant(c))).value for c in (1.0, 2.0, 3.0)]
    assert vals[0] > vals[1] > vals[2]
    assert vals[0] == pytest.approx(3 * vals[2], rel=1e-10)


def test_pressure_at_infinity_of_flows():
    rep = suspension_pressure_at_infinity(SuspensionSpec(renewal_shift(), constant(1.0)))
    assert rep.value == pytest.approx(0.0, abs=0.05)
    assert suspension_pressure_at_infinity(SuspensionSpec(star_shift(), constant(1.0))).value == -math.inf
    assert suspension_pressure_at_infinity(SuspensionSpec(full_shift(2), constant(3.0))).value == -math.inf


def test_flow_cylinder_masses():
    g = build_truncation(full_shift(2))
    mu = bernoulli(g, {1: 0.5, 2: 0.5})
    same = flow_cylinder_masses(FlowMeasureView(mu, constant(1.0), 1.0, g), 2, c=1.0)
    for w, m in mu.cylinder_vector(2).entries.items():
        assert same.mass(w) == pytest.approx(m)
    two = flow_cylinder_masses(FlowMeasureView(mu, constant(2.0), 1.0, g), 1, c=2.0)
    assert two.mass((1,)) == pytest.approx(0.5)
    none = flow_cylinder_masses(FlowMeasureView(mu, constant(2.0), 0.0, g), 2)
    assert none.entries == {}


def test_flow_distance_is_zero_on_itself():
    g = build_truncation(full_shift(2))
    v = FlowMeasureView(bernoulli(g, {1: 0.3, 2: 0.7}), constant(2.0), 1.0, g)
    assert flow_distance(v, v, 3, graph=g) == 0.0


def test_flow_spr():
    ok, info = flow_spr_test(SuspensionSpec(renewal_shift(), constant(1.0)))
    assert ok and info["margin"] == pytest.approx(LOG2, abs=0.05)
    assert info["witness_gap"] < 1e-6
    ok, info = flow_spr_test(SuspensionSpec(star_shift(), x1()))
    assert ok and info["P_theta_inf"] == -math.inf
    # a constant roof leaves the infinite entropy of the star in place
    ok, info = flow_spr_test(SuspensionSpec(star_shift(), constant(1.0)))
    assert ok is None and info["P_theta_inf"] == -math.inf
    ok, info = flow_spr_test(SuspensionSpec(full_shift(2), constant(2.0)))
    assert ok


def test_flow_report_fields():
    rep = flow_report(SuspensionSpec(build_truncation(golden_mean()), constant(1.0)))
    assert set(rep) == {"P_theta", "P_theta_inf", "h_inf_theta", "spr", "margin", "details"}
    assert rep["h_inf_theta"] == -math.inf

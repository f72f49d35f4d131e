import math

import numpy as np
import pytest

from reggeflow.flow import (
    FlowConfig,
    FlowSample,
    FlowStatus,
    FlowTrajectory,
    UnsupportedComplexError,
    conservation_check,
    flow_rhs,
    integrate,
)
from reggeflow.fixtures import published_fixed_point
from reggeflow.geometry import InadmissibleError
from reggeflow.metric import random_admissible, uniform_metric
from reggeflow.rng import SplitMix64

R_TRIVIAL = 2 * math.pi - 4 * math.acos(1.0 / 3.0)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.0])
def test_trivial_metric_is_fixed_point(tri16, alpha):
    rhs = flow_rhs(tri16, uniform_metric(tri16, 3.0), FlowConfig(alpha=alpha))
    assert np.max(np.abs(rhs)) < 1e-13


def test_unnormalized_rhs(tri16):
    rhs = flow_rhs(tri16, uniform_metric(tri16), FlowConfig(normalized=False))
    np.testing.assert_allclose(rhs, -2 * R_TRIVIAL, atol=1e-13)


def test_fixed_point_1_rhs_small(tri16):
    g = published_fixed_point(tri16, 1)
    assert np.max(np.abs(flow_rhs(tri16, g))) <= 1e-2


def test_normalized_rhs_conserves_volume_to_first_order(tri16, rng):
    # d/dt sum l^3 = (3/2) sum l du/dt at alpha = 2
    g = random_admissible(tri16, rng, sigma=0.4)
    assert abs(np.sum(np.sqrt(g) * flow_rhs(tri16, g))) < 1e-12 * np.sum(g**1.5)


def test_trivial_start_converges_immediately(tri16):
    traj = integrate(tri16, uniform_metric(tri16))
    assert traj.status is FlowStatus.CONVERGED
    assert len(traj.samples) == 1 and traj.n_accepted == 0
    assert conservation_check(traj) == (0.0, 0.0)


def test_alpha_one_trivial_start(tri16):
    traj = integrate(tri16, uniform_metric(tri16), FlowConfig(alpha=1.0))
    assert traj.status is FlowStatus.CONVERGED


def test_adversarial_start_degenerates(tri16):
    g = uniform_metric(tri16)
    g[tri16.edge_index("A1", "B1")] = 2.5
    traj = integrate(tri16, g, FlowConfig(t_max=50.0))
    assert traj.status in (FlowStatus.SINGULAR, FlowStatus.STEP_UNDERFLOW)
    assert traj.final.t < 50.0


def test_unnormalized_trivial_flow_shrinks_linearly(tri16):
    # with R constant in the scale, g(t) = 1 - 2 R t exactly
    traj = integrate(tri16, uniform_metric(tri16), FlowConfig(normalized=False, t_max=0.2))
    assert traj.status is FlowStatus.MAX_TIME
    np.testing.assert_allclose(traj.final_metric, 1 - 2 * R_TRIVIAL * 0.2, rtol=1e-10)


def test_unnormalized_trivial_flow_collapses(tri16):
    traj = integrate(tri16, uniform_metric(tri16), FlowConfig(normalized=False, t_max=1.0))
    assert traj.status in (FlowStatus.SINGULAR, FlowStatus.STEP_UNDERFLOW)
    assert traj.final.t < 1 / (2 * R_TRIVIAL)


def test_boundary_complex_rejected(single_tet):
    with pytest.raises(UnsupportedComplexError, match="closed"):
        integrate(single_tet, np.ones(6))


def test_inadmissible_start_rejected(tri16):
    g = uniform_metric(tri16)
    g[0] = 100.0
    with pytest.raises(InadmissibleError):
        integrate(tri16, g)


def test_config_validation():
    with pytest.raises(ValueError):
        FlowConfig(dt_init=1e-3, dt_min=1e-2)
    with pytest.raises(ValueError):
        FlowConfig(alpha=-1.0)
    with pytest.raises(ValueError):
        FlowConfig(record_every=0)


def test_scaling_commutation(tri16):
    # the normalized field is degree-0 homogeneous, so c*g0 follows c*g(t/c)
    g0 = random_admissible(tri16, SplitMix64(7), sigma=0.2)
    T = 0.05
    a = integrate(tri16, g0, FlowConfig(t_max=T))
    b = integrate(tri16, 4.0 * g0, FlowConfig(t_max=4.0 * T))
    assert a.status is FlowStatus.MAX_TIME and b.status is FlowStatus.MAX_TIME
    np.testing.assert_allclose(b.final_metric, 4.0 * a.final_metric, rtol=1e-6)


def test_volume_conserved_and_action_descends(tri16):
    g0 = random_admissible(tri16, SplitMix64(11), sigma=0.1)
    traj = integrate(tri16, g0, FlowConfig(t_max=0.1))
    drift, rise = conservation_check(traj)
    assert drift <= 1e-6
    assert rise <= 1e-8
    assert traj.samples[-1].E < traj.samples[0].E


def test_record_every(tri16):
    g0 = random_admissible(tri16, SplitMix64(11), sigma=0.1)
    full = integrate(tri16, g0, FlowConfig(t_max=0.05))
    sparse = integrate(tri16, g0, FlowConfig(t_max=0.05, record_every=3))
    assert len(sparse.samples) < len(full.samples)
    assert sparse.final.t == full.final.t
    np.testing.assert_array_equal(sparse.final_metric, full.final_metric)


def test_conservation_check_requires_normalized_alpha2(tri16):
    traj = integrate(tri16, uniform_metric(tri16), FlowConfig(alpha=1.0))
    with pytest.raises(ValueError):
        conservation_check(traj)


def test_csv_layout(tri16):
    g0 = random_admissible(tri16, SplitMix64(11), sigma=0.1)
    traj = integrate(tri16, g0, FlowConfig(t_max=0.01))
    lines = traj.to_csv(tri16).splitlines()
    header = lines[0].split(",")
    assert header[0] == "t" and header[1:25] == tri16.edge_keys
    assert header[25:] == ["E", "sumL3", "lambda", "Q", "residual"]
    assert len(lines) == len(traj.samples) + 1
    row = [float(x) for x in lines[-1].split(",")]
    assert row[1:25] == traj.final_metric.tolist()


def test_constant_trajectory_conservation():
    s = FlowSample(0.0, np.ones(3), 1.0, 3.0, 1.0, 1.0, 0.0)
    traj = FlowTrajectory([s, s], FlowStatus.MAX_TIME, np.ones(3), FlowConfig())
    assert conservation_check(traj) == (0.0, 0.0)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anosovlab.errors import InvalidInputError, NumericError
from anosovlab.geodesic import (
    CAT_LAMBDA1, AccuracyError, SuspensionPoint, christoffel, curvature_report, energy,
    frame_lengths, frame_lengths_closed_form, geodesic_acceleration, geodesic_residual,
    integrate_geodesic, metric_closed_form, metric_inverse, metric_tensor,
    printed_equation_mismatch, pullback_metric, suspension_flow_check, transform_trajectory,
)

from conftest import CAT_H

L2 = CAT_H ** 2


def test_metric_at_zero():
    g = metric_tensor(SuspensionPoint())
    assert g[:2, :2] == pytest.approx(np.array([[7, -4], [-4, 3]]), abs=1e-12)
    assert np.linalg.det(g[:2, :2]) == pytest.approx(5, abs=1e-10)
    assert g[2, 2] == 1 and g[0, 2] == 0 and g[1, 2] == 0


@pytest.mark.parametrize("u", [-1.3, 0.0, 0.4, 2.0])
def test_metric_properties(u):
    pt = SuspensionPoint(0.1, -0.2, u)
    g = metric_tensor(pt)
    assert g[2, 2] == 1.0
    assert np.allclose(g, g.T)
    assert metric_closed_form(pt) == pytest.approx(g, rel=1e-12)
    assert metric_inverse(u) @ g == pytest.approx(np.eye(3), abs=1e-9)


@pytest.mark.parametrize("u", [0.0, 0.3, -0.7])
def test_pullback_invariance(u):
    pt = SuspensionPoint(u=u)
    assert np.max(np.abs(pullback_metric(pt) - metric_tensor(pt))) < 1e-10


@pytest.mark.parametrize("u", [0.0, 0.25, -1.5, 3.0])
def test_sectional_curvatures_analytic(u):
    rep = curvature_report(SuspensionPoint(u=u))
    assert rep.K12 == pytest.approx(L2, abs=1e-9)
    assert rep.K13 == pytest.approx(-L2, abs=1e-9)
    assert rep.K23 == pytest.approx(-L2, abs=1e-9)
    assert rep.R == pytest.approx(2 * (rep.K12 + rep.K13 + rep.K23), rel=1e-12)
    assert rep.R == pytest.approx(-2 * CAT_H ** 2, rel=1e-9)


def test_curvature_numbers():
    rep = curvature_report(SuspensionPoint())
    assert rep.K12 == pytest.approx(0.92626, abs=1e-5)
    assert rep.R == pytest.approx(-1.85252, abs=1e-5)


@pytest.mark.parametrize("h", [1e-3, 1e-4, 1e-5])
def test_curvature_finite_difference(h):
    rep = curvature_report(SuspensionPoint(u=0.2), "fd", h)
    assert rep.method == "finite-difference"
    for k, sign in (("K12", 1), ("K13", -1), ("K23", -1)):
        assert getattr(rep, k) == pytest.approx(sign * L2, abs=1e-4)


def test_curvature_other_lambda():
    lam = 4.0
    rep = curvature_report(SuspensionPoint(lambda1=lam))
    assert rep.K12 == pytest.approx(math.log(lam) ** 2, abs=1e-9)
    assert rep.R == pytest.approx(-2 * math.log(lam) ** 2, rel=1e-9)


@pytest.mark.parametrize("bad", [dict(method="spline"), dict(method="fd", h_fd=1e-8)])
def test_curvature_rejects(bad):
    with pytest.raises(InvalidInputError):
        curvature_report(SuspensionPoint(), **bad)


def test_lambda_must_exceed_one():
    with pytest.raises(InvalidInputError):
        SuspensionPoint(lambda1=1.0)


def test_christoffel_symmetric_in_lower_indices():
    rep = curvature_report(SuspensionPoint(u=0.3))
    gam = rep.christoffel
    assert np.allclose(gam, np.swapaxes(gam, 1, 2))


def test_frame_lengths():
    assert frame_lengths(SuspensionPoint()) == pytest.approx((5, 5, 1), abs=1e-12)
    a = frame_lengths(SuspensionPoint(u=1.0))
    l2 = 1 / CAT_LAMBDA1
    assert a == pytest.approx((5 * l2 ** 2, 5 * CAT_LAMBDA1 ** 2, 1), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3))
def test_frame_lengths_closed_form(u):
    pt = SuspensionPoint(u=u)
    assert frame_lengths(pt) == pytest.approx(frame_lengths_closed_form(pt), rel=1e-9)
    assert frame_lengths(pt)[2] == 1.0


def test_printed_equations_agree():
    rel = printed_equation_mismatch()["relative"]
    assert max(rel) < 1e-10


def test_pure_u_geodesic_is_straight():
    traj = integrate_geodesic(SuspensionPoint(0.3, -0.1, 0.2), [0, 0, 1], 5.0, 1e-3)
    assert np.allclose(traj.x[:, :2], [[0.3, -0.1]], atol=1e-13)
    assert traj.x[:, 2] == pytest.approx(0.2 + traj.t, abs=1e-12)


def test_energy_conserved():
    traj = integrate_geodesic(SuspensionPoint(), [0.3, -0.2, 0.5], 10.0, 1e-3)
    assert traj.energy_drift < 1e-6
    e = [energy(x, v) for x, v in zip(traj.x[::500], traj.v[::500])]
    assert np.max(np.abs(np.array(e) / e[0] - 1)) < 1e-6


def test_trajectory_solves_equations():
    traj = integrate_geodesic(SuspensionPoint(u=-0.2), [0.4, 0.1, -0.3], 2.0, 1e-3)
    assert geodesic_residual(traj) < 1e-5


def test_transformed_trajectory_is_a_solution():
    traj = integrate_geodesic(SuspensionPoint(u=0.1), [0.2, 0.5, 0.4], 2.0, 1e-3)
    moved = transform_trajectory(traj)
    assert geodesic_residual(moved) < 1e-5
    assert not np.allclose(moved.x, traj.x)


def test_integrator_rejects_bad_steps():
    with pytest.raises(InvalidInputError):
        integrate_geodesic(SuspensionPoint(), [0, 0, 1], 1.0, 0.5)
    with pytest.raises(InvalidInputError):
        integrate_geodesic(SuspensionPoint(), [0, 0], 1.0, 0.001)


def test_integrator_flags_drift():
    with pytest.raises(AccuracyError):
        integrate_geodesic(SuspensionPoint(), [0.3, -0.2, 0.5], 10.0, 0.1, max_drift=1e-14)
    assert issubclass(AccuracyError, NumericError)


@pytest.mark.parametrize("t,which,expected", [
    (0.0, "expanding", 1.0),
    (1.0, "expanding", CAT_LAMBDA1),
    (-1.0, "expanding", 1 / CAT_LAMBDA1),
    (1.0, "contracting", 1 / CAT_LAMBDA1),
])
def test_suspension_flow(t, which, expected):
    assert suspension_flow_check(t, which) == pytest.approx(expected, rel=1e-12)


def test_suspension_flow_rejects():
    with pytest.raises(InvalidInputError):
        suspension_flow_check(1.0, "neutral")


def test_integrator_rejects_divergence():
    with pytest.raises(AccuracyError):
        integrate_geodesic(SuspensionPoint(), [30.0, -10.0, 40.0], 10.0, 0.1)


@settings(max_examples=15, deadline=None)
@given(st.floats(-6, 6))
def test_analytic_curvature_stable_in_u(u):
    rep = curvature_report(SuspensionPoint(u=u))
    assert (rep.K12, rep.K13, rep.K23) == pytest.approx((L2, -L2, -L2), abs=1e-12)


@pytest.mark.parametrize("method", ["analytic", "fd"])
@pytest.mark.parametrize("u", [0.0, 0.6, -0.4])
def test_charts_agree_at_moderate_u(method, u):
    pt = SuspensionPoint(u=u)
    a = curvature_report(pt, method, chart="eigen")
    b = curvature_report(pt, method, chart="w")
    assert (a.K12, a.K13, a.K23, a.R) == pytest.approx((b.K12, b.K13, b.K23, b.R), abs=1e-6)
    assert a.frame_lengths == pytest.approx(b.frame_lengths, rel=1e-9)


def test_unknown_chart():
    with pytest.raises(InvalidInputError):
        curvature_report(SuspensionPoint(), chart="polar")


@pytest.mark.parametrize("u", [-6.0, 2.5, 6.0])
def test_fd_accurate_at_large_u(u):
    rep = curvature_report(SuspensionPoint(u=u), "fd", 1e-4)
    assert (rep.K12, rep.K13, rep.K23) == pytest.approx((L2, -L2, -L2), abs=1e-6)

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from wkam import convex
from wkam.convex import ConvexProfile, NonConvexError
from wkam.pendulum import EXPOSED, EXTREME_NOT_EXPOSED, FLAT_INTERIOR, PendulumOracle


def test_nonconvex_input_rejected():
    with pytest.raises(NonConvexError):
        ConvexProfile(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 0.0]))


def test_quadratic_conjugate():
    t = np.linspace(-2, 2, 401)
    p = ConvexProfile(t, t**2 / 2)
    q = convex.discrete_conjugate(p)
    inside = np.abs(q.t) <= 1.9
    assert np.max(np.abs(q.f[inside] - q.t[inside] ** 2 / 2)) < 1e-3


def test_biconjugate_reproduces_samples():
    t = np.linspace(-2, 2, 81)
    f = np.maximum(np.abs(t) - 0.5, 0) ** 2 + 0.1 * t
    p = ConvexProfile(t, f)
    assert np.max(np.abs(convex.biconjugate(p) - f)) < 1e-9


def test_abs_has_kink_and_no_constant_segment():
    t = np.linspace(-1, 1, 41)
    p = ConvexProfile(t, np.abs(t), slope_method="secant")
    sd = convex.subdifferential_at(p, 0.0)
    assert (sd.lo, sd.hi) == pytest.approx((-1.0, 1.0))
    segs = convex.flat_segments(p)
    assert len(segs) == 2
    assert not any(s.is_constant for s in segs)
    rep = convex.differentiability_scan(p)
    assert not rep.differentiable
    assert rep.kinks[0][0] == pytest.approx(0.0)


def test_subdifferential_between_nodes_is_cell_secant():
    t = np.linspace(0, 1, 11)
    p = ConvexProfile(t, t**2, slope_method="secant")
    sd = convex.subdifferential_at(p, 0.55)
    assert sd.lo == sd.hi == pytest.approx(1.1)


def _oracle_profile(n=61):
    o = PendulumOracle()
    c = np.round(np.linspace(-3, 3, n), 12)
    a = np.array([o.alpha(x) for x in c])
    s = np.array([o.alpha_slope(x) for x in c])
    return o, ConvexProfile(c, a, slope_method="given", slopes=s)


def test_oracle_profile_diagnostics():
    # at step 0.05 the nodes +-1.25 are the last flat samples before +-c*
    o, p = _oracle_profile(121)
    q = convex.discrete_conjugate(p)
    sd = convex.subdifferential_at(q, 0.0)
    assert sd.lo == pytest.approx(-1.25, abs=1e-9)
    assert sd.hi == pytest.approx(1.25, abs=1e-9)
    segs = [s for s in convex.flat_segments(p) if s.is_constant]
    assert len(segs) == 1
    rep = convex.differentiability_scan(p)
    assert rep.cross_check_pass
    assert not rep.strictly_convex and not rep.conjugate_differentiable


def test_oracle_classes_from_profile():
    o, p = _oracle_profile(121)
    assert convex.classify_point(p, 0.0).label == FLAT_INTERIOR
    assert convex.classify_point(p, 1.25).label == EXTREME_NOT_EXPOSED
    assert convex.classify_point(p, 2.0).label == EXPOSED


def test_classify_needs_margin():
    t = np.linspace(0, 1, 11)
    p = ConvexProfile(t, t**2)
    with pytest.raises(ValueError):
        convex.classify_point(p, 0.0)


def test_gradient_inverse_on_quadratic():
    t = np.linspace(-2, 2, 81)
    s = np.linspace(-3, 3, 121)
    pa = ConvexProfile(t, t**2 / 2)
    pb = ConvexProfile(s, s**2 / 2)
    rep = convex.gradient_inverse_check(pa, pb, slope_tol=0.25)
    assert rep.tested > 50
    assert rep.max_deviation < 1e-3


def test_c0_report_verdicts():
    assert convex.c0_report(1, 1, {0.0: 1.0, 1.0: 1.0}, 256).verdict == "C0-consistent"
    v = convex.c0_report(1, 1, {0.0: 0.01, 2.0: 1.0}, 256)
    assert v.verdict == "Fails-at" and v.failing == [0.0]
    assert convex.c0_report(2, 1, {0.0: 1.0}, 256).verdict == "Blocked"
    with pytest.raises(ValueError):
        convex.c0_report(1, 1, {}, 256)


convex_samples = st.lists(st.floats(0, 5, allow_nan=False), min_size=4, max_size=30)


def _convex_from_increments(incs, seed):
    # cumulative sums of nondecreasing slopes give a convex sequence
    s = np.sort(np.asarray(incs)) - 2.5
    t = np.linspace(-1, 1, len(s) + 1)
    f = np.concatenate([[seed], seed + np.cumsum(s * np.diff(t))])
    return t, f


@settings(max_examples=60, deadline=None)
@given(convex_samples, st.floats(-3, 3))
def test_biconjugate_identity_property(incs, seed):
    t, f = _convex_from_increments(incs, seed)
    p = ConvexProfile(t, f, slope_method="secant")
    assert np.max(np.abs(convex.biconjugate(p) - f)) < 1e-8


@settings(max_examples=60, deadline=None)
@given(convex_samples, st.floats(-3, 3))
@example([0.0, 0.0, 0.0, 1e-10], 0.0)  # nearly affine data once collapsed the dual grid
def test_fenchel_young_property(incs, seed):
    t, f = _convex_from_increments(incs, seed)
    p = ConvexProfile(t, f, slope_method="secant")
    q = convex.discrete_conjugate(p)
    gap = f[:, None] + q.f[None, :] - t[:, None] * q.t[None, :]
    assert gap.min() >= -1e-9


@settings(max_examples=60, deadline=None)
@given(convex_samples, st.floats(-3, 3), st.floats(-0.99, 0.99))
def test_subdifferential_is_ordered_interval(incs, seed, x):
    t, f = _convex_from_increments(incs, seed)
    p = ConvexProfile(t, f, slope_method="secant")
    sd = convex.subdifferential_at(p, x)
    assert sd.lo <= sd.hi + 1e-12


@settings(max_examples=40, deadline=None)
@given(convex_samples, st.floats(-3, 3))
def test_envelope_of_convex_data_is_identity(incs, seed):
    t, f = _convex_from_increments(incs, seed)
    p = ConvexProfile(t, f, slope_method="secant")
    assert np.allclose(convex.convex_envelope(p), f, atol=1e-12)

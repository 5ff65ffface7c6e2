import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wkam.dynamics import FourierPotential, SystemSpec
from wkam.measure_lp import (
    CutoffError,
    MeasureGrid,
    holonomy_wavevectors,
    measure_support,
    projected_support,
    scan_alpha,
    solve_alpha,
    solve_beta,
    support_overlap,
)
from wkam.pendulum import PendulumOracle

COARSE = MeasureGrid(nx=32, nv=33, vmax=4.0)
# frozen from the nx=256, nv=129 run
ALPHA_LP_2 = 2.063632414020845


def test_grid_validation():
    with pytest.raises(ValueError):
        MeasureGrid(nx=8)
    with pytest.raises(ValueError):
        MeasureGrid(nv=10)
    g = MeasureGrid(nx=32, nv=17).refine()
    assert (g.nx, g.nv) == (64, 33)


def test_wavevectors_half_lattice():
    k1 = holonomy_wavevectors(1, 4)
    assert k1.shape == (4, 1)
    k2 = holonomy_wavevectors(2, 2)
    # no k together with -k, no zero
    keys = {tuple(k) for k in k2}
    assert all(tuple(-np.asarray(k)) not in keys for k in keys)
    assert (0, 0) not in keys


def test_alpha_at_zero_is_max_potential(pendulum):
    r = solve_alpha(pendulum, COARSE, 0.0)
    assert r.alpha == pytest.approx(1.0, abs=1e-9)
    assert r.measure.total_mass == pytest.approx(1.0)
    assert np.max(np.abs(r.measure.holonomy_residual)) < 1e-9


def test_beta_at_zero(pendulum):
    r = solve_beta(pendulum, COARSE, 0.0)
    assert r.beta == pytest.approx(-1.0, abs=1e-9)


def test_free_particle_alpha(free_particle):
    for c in (-1.5, 0.3, 1.0):
        assert solve_alpha(free_particle, COARSE, c).alpha == pytest.approx(c * c / 2, abs=1e-2)


def test_backends_agree(pendulum):
    g = MeasureGrid(nx=16, nv=9, vmax=3.0)
    a = solve_alpha(pendulum, g, 1.7, backend="highs").alpha
    b = solve_alpha(pendulum, g, 1.7, backend="simplex").alpha
    assert a == pytest.approx(b, abs=1e-9)


def test_cutoff_error(pendulum):
    with pytest.raises(CutoffError):
        solve_alpha(pendulum, MeasureGrid(nx=32, nv=9, vmax=1.0), 3.0)
    with pytest.raises(CutoffError):
        solve_beta(pendulum, MeasureGrid(nx=32, nv=9, vmax=1.0), 1.5)


def test_scan_order_independent_of_threads(pendulum):
    cs = [-2.0, -0.5, 1.0, 2.5]
    a = [r.alpha for r in scan_alpha(pendulum, COARSE, cs, threads=1)]
    b = [r.alpha for r in scan_alpha(pendulum, COARSE, cs, threads=3)]
    assert a == b


def test_rotation_sign_follows_c(pendulum):
    o = PendulumOracle()
    r = solve_alpha(pendulum, MeasureGrid(nx=64, nv=65), -2.0)
    assert r.rotation[0] == pytest.approx(-o.alpha_slope(2.0), abs=5e-2)


def test_flat_measures_overlap_exposed_do_not(pendulum):
    g = MeasureGrid(nx=64, nv=65)
    m0 = solve_alpha(pendulum, g, 0.0).measure
    m5 = solve_alpha(pendulum, g, 0.5).measure
    m2 = solve_alpha(pendulum, g, 2.0).measure
    m3 = solve_alpha(pendulum, g, 3.0).measure
    assert support_overlap(m0, m5) > 0.9
    assert support_overlap(m2, m3) < 1e-3
    assert projected_support(measure_support(m0)).tolist() == [0]


def test_two_torus_scan_runs():
    sys = SystemSpec(FourierPotential(2, cos=[((1, 0), 0.5), ((0, 1), 0.5)]))
    g = MeasureGrid(nx=16, nv=5, vmax=3.0, n=2)
    r = solve_alpha(sys, g, [0.0, 0.0])
    assert r.alpha == pytest.approx(1.0, abs=1e-9)
    assert r.rotation.shape == (2,)


@pytest.mark.slow
def test_desk_scale_value_frozen(pendulum):
    assert solve_alpha(pendulum, MeasureGrid(), 2.0).alpha == pytest.approx(ALPHA_LP_2, abs=1e-9)


@settings(max_examples=8, deadline=None)
@given(st.floats(-2.5, 2.5), st.floats(-2.5, 2.5))
def test_alpha_convexity_property(c1, c2):
    sys = SystemSpec.pendulum()
    g = MeasureGrid(nx=16, nv=17)
    a1 = solve_alpha(sys, g, c1).alpha
    a2 = solve_alpha(sys, g, c2).alpha
    am = solve_alpha(sys, g, 0.5 * (c1 + c2)).alpha
    assert am <= 0.5 * (a1 + a2) + 1e-8


@settings(max_examples=8, deadline=None)
@given(st.floats(-2.5, 2.5), st.floats(-1.5, 1.5))
def test_fenchel_young_between_lps(c, h):
    sys = SystemSpec.pendulum()
    g = MeasureGrid(nx=16, nv=17)
    a = solve_alpha(sys, g, c).alpha
    b = solve_beta(sys, g, h).beta
    assert a + b - c * h >= -1e-8


@settings(max_examples=6, deadline=None)
@given(st.floats(-2.0, 2.0))
def test_refinement_increases_alpha(c):
    # a finer grid contains the coarse closed measures, so its max is no smaller
    sys = SystemSpec.pendulum()
    g = MeasureGrid(nx=16, nv=17, vmax=4.0)
    a = solve_alpha(sys, g, c).alpha
    b = solve_alpha(sys, g.refine(), c).alpha
    assert b >= a - 1e-2

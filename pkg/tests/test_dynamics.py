import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wkam.dynamics import (
    FourierPotential,
    PhasePoint,
    SystemSpec,
    birkhoff_rotation,
    eval_energy,
    integrate_flow,
    legendre_point,
    nearest_lift,
)
from wkam.pendulum import PendulumOracle


def test_pendulum_potential_values():
    U = FourierPotential.pendulum()
    assert U(0.0) == pytest.approx(1.0)
    assert U(0.5) == pytest.approx(-1.0)
    assert U.grad(0.25) == pytest.approx(-2 * math.pi)
    assert U.is_even


def test_potential_json_round_trip():
    U = FourierPotential(1, cos=[(1, 0.7), (3, -0.2)], sin=[(2, 0.1)])
    V = FourierPotential.from_json(U.to_json(), 1)
    x = np.linspace(0, 1, 17)
    assert np.allclose(U(x), V(x))
    assert not U.is_even


def test_system_json_round_trip(pendulum):
    assert SystemSpec.from_json(pendulum.to_json()) == pendulum


def test_gradient_matches_finite_difference():
    U = FourierPotential(1, cos=[(1, 0.7), (2, 0.3)], sin=[(1, -0.4)])
    x = np.linspace(0, 1, 9)
    h = 1e-6
    fd = (U(x + h) - U(x - h)) / (2 * h)
    assert np.allclose(np.ravel(U.grad(x)), fd, atol=1e-6)


def test_phase_point_reduces_mod_one():
    p = PhasePoint.tangent(1.25, 0.3)
    assert p.x[0] == pytest.approx(0.25)


def test_legendre_map_scales_by_mass():
    sys = SystemSpec.pendulum(m=2.0)
    q = legendre_point(sys, PhasePoint.tangent(0.1, 0.5))
    assert q.chart == "cotangent"
    assert q.p[0] == pytest.approx(1.0)
    back = legendre_point(sys, q)
    assert back.chart == "tangent" and back.v[0] == pytest.approx(0.5)
    # H(x, p) at p = m v equals the energy of the tangent point
    assert sys.hamiltonian(0.1, 1.0) == pytest.approx(eval_energy(sys, PhasePoint.tangent(0.1, 0.5)))


def test_free_orbit_winds_once(free_particle):
    tr = integrate_flow(free_particle, PhasePoint.tangent(0.0, 1.0), 1e-3, 1000)
    assert tr.positions[-1][0] == pytest.approx(0.0, abs=1e-9)
    assert np.atleast_1d(tr.winding)[0] == 1


@pytest.mark.parametrize("x0,v0", [(0.5, 0.0), (0.3, 1.0), (0.0, 2.5)])
def test_energy_drift_below_one_millionth(pendulum, x0, v0):
    tr = integrate_flow(pendulum, PhasePoint.tangent(x0, v0), 1e-3, 10_000)
    e = tr.energies(pendulum)
    assert np.max(np.abs(e - e[0])) < 1e-6


def test_leapfrog_order_two_drifts_more(pendulum):
    start = PhasePoint.tangent(0.3, 1.0)
    e2 = integrate_flow(pendulum, start, 1e-2, 2000, order=2).energies(pendulum)
    e4 = integrate_flow(pendulum, start, 1e-2, 2000, order=4).energies(pendulum)
    assert np.ptp(e4) < np.ptp(e2)


def test_time_reversal_returns_to_start(pendulum):
    tr = integrate_flow(pendulum, PhasePoint.tangent(0.1, 1.7), 1e-3, 3000)
    end = tr.point(len(tr) - 1)
    back = integrate_flow(pendulum, PhasePoint.tangent(end.x[0], -end.v[0]), 1e-3, 3000)
    assert abs(nearest_lift(back.positions[-1][0] - 0.1)) < 1e-8
    assert back.velocity[-1][0] == pytest.approx(-1.7, abs=1e-8)


def test_rotation_number_matches_oracle(pendulum):
    o = PendulumOracle()
    E = 2.0
    v0 = math.sqrt(2 * (E - 1.0))
    tr = integrate_flow(pendulum, PhasePoint.tangent(0.0, v0), 1e-3, 200_000)
    assert birkhoff_rotation(tr)[0] == pytest.approx(o.rotation(E), abs=1e-3)


def test_integrator_rejects_aliasing_step(pendulum):
    with pytest.raises(ValueError, match="alias"):
        integrate_flow(pendulum, PhasePoint.tangent(0.0, 10.0), 0.1, 10)


def test_short_average_is_rejected(free_particle):
    tr = integrate_flow(free_particle, PhasePoint.tangent(0.0, 1.0), 1e-3, 10)
    with pytest.raises(ValueError):
        birkhoff_rotation(tr)


def test_two_torus_free_motion():
    sys = SystemSpec.free(n=2)
    tr = integrate_flow(sys, PhasePoint.tangent([0.0, 0.0], [0.7, -0.3]), 1e-2, 1000)
    assert np.allclose(birkhoff_rotation(tr), [0.7, -0.3])


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(0, 1))
def test_energy_is_conserved_for_random_starts(v0, x0):
    sys = SystemSpec.pendulum()
    tr = integrate_flow(sys, PhasePoint.tangent(x0, v0), 2e-3, 500)
    e = tr.energies(sys)
    assert np.ptp(e) < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.floats(-100, 100, allow_nan=False))
def test_nearest_lift_range(d):
    r = nearest_lift(np.array([d]))[0]
    assert -0.5 <= r < 0.5
    assert abs((d - r) - round(d - r)) < 1e-9

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wkam.dynamics import SystemSpec
from wkam.lax_oleinik import (
    NEGATIVE,
    POSITIVE,
    ConvergenceError,
    SemigroupConfig,
    ValueFunction,
    brute_force_step,
    coincidence_set,
    conjugate_solution,
    default_eps_set,
    derivative_kinks,
    hj_residual,
    lax_oleinik_step,
    mane_aubry_estimates,
    random_seed_function,
    weak_kam_fixed_point,
)
from wkam.pendulum import PendulumOracle

CFG = SemigroupConfig()


def test_config_validation():
    with pytest.raises(ValueError):
        SemigroupConfig(tau=0.0)
    with pytest.raises(ValueError):
        SemigroupConfig(damping=1.5)
    with pytest.raises(ValueError):
        SemigroupConfig(quadrature="trapezoid")
    with pytest.raises(ValueError):
        SemigroupConfig(tau=1.0).window_for(64)  # window would wrap the circle


def test_window_default():
    assert CFG.window_for(256) == 103


def test_step_matches_brute_force(pendulum, rng):
    u = ValueFunction(random_seed_function(64, rng), 0.7)
    fast = lax_oleinik_step(pendulum, u, 0.7, CFG).samples
    slow = brute_force_step(pendulum, u.samples, 0.7, CFG)
    assert np.allclose(fast, slow, atol=1e-12)
    fastp = lax_oleinik_step(pendulum, u, 0.7, CFG, POSITIVE).samples
    slowp = brute_force_step(pendulum, u.samples, 0.7, CFG, POSITIVE)
    assert np.allclose(fastp, slowp, atol=1e-12)


def test_step_commutes_with_constants(pendulum, rng):
    u = ValueFunction(random_seed_function(64, rng), 0.3)
    a = lax_oleinik_step(pendulum, u + 2.5, 0.3, CFG).samples
    b = lax_oleinik_step(pendulum, u, 0.3, CFG).samples + 2.5
    assert np.allclose(a, b, atol=1e-12)


def test_free_particle_fixed_point(free_particle):
    vf, alpha = weak_kam_fixed_point(free_particle, 0.5, CFG, np.zeros(64))
    assert alpha == pytest.approx(0.125, abs=1e-3)
    assert np.ptp(vf.samples) < 1e-6


@pytest.mark.parametrize("c", [2.0, 1.5])
def test_fixed_point_against_oracle(pendulum, oracle, c):
    nx = 128
    vf, alpha = weak_kam_fixed_point(pendulum, c, CFG, np.zeros(nx))
    assert alpha == pytest.approx(oracle.alpha(c), rel=2e-3)
    ref = oracle.weak_kam_solution(c, nx)
    d = vf.samples - ref
    assert np.ptp(d) < 2e-3
    assert hj_residual(pendulum, vf, c) < 5e-2


def test_convergence_error_carries_partial(pendulum):
    cfg = SemigroupConfig(max_iters=3)
    with pytest.raises(ConvergenceError) as e:
        weak_kam_fixed_point(pendulum, 2.0, cfg, np.zeros(64))
    assert e.value.iters == 3
    assert e.value.partial is not None


def test_conjugate_pair_and_aubry_at_two(pendulum):
    vf, _ = weak_kam_fixed_point(pendulum, 2.0, CFG, np.zeros(128))
    pair = conjugate_solution(pendulum, vf, 2.0, CFG)
    assert len(coincidence_set(pair, default_eps_set(128))) == 128
    assert pair.u_plus.sign == POSITIVE


def test_aubry_at_zero_is_a_point(pendulum):
    est = mane_aubry_estimates(pendulum, 0.0, CFG, 2, nx=128)
    assert 1 <= len(est.aubry) <= 5
    x = est.aubry / 128
    assert np.all(np.minimum(x, 1 - x) < 0.03)
    assert len(est.mane) >= len(est.aubry)


def test_kink_at_c_star_only_at_zero(pendulum, oracle):
    vf, _ = weak_kam_fixed_point(pendulum, oracle.c_star, CFG, np.zeros(256))
    k = derivative_kinks(vf)
    assert k.tolist() == [0.0]


def test_no_kink_at_two(pendulum):
    vf, _ = weak_kam_fixed_point(pendulum, 2.0, CFG, np.zeros(128))
    assert len(derivative_kinks(vf)) == 0


def test_seeds_converge_to_same_solution_when_aubry_full(pendulum):
    est = mane_aubry_estimates(pendulum, 2.0, CFG, 3, nx=64)
    u = [p.u_minus.samples - p.u_minus.samples.mean() for p in est.pairs]
    for a in u[1:]:
        assert np.max(np.abs(a - u[0])) < 1e-6


def test_rough_data_hits_window(pendulum):
    from wkam.lax_oleinik import WindowError

    x = np.arange(64) / 64
    # the global minimum lies farther away than the window reaches
    u = ValueFunction(30.0 * np.sin(2 * np.pi * x), 0.0)
    with pytest.raises(WindowError):
        lax_oleinik_step(pendulum, u, 0.0, CFG)


def test_default_eps_set_scales_quadratically():
    assert default_eps_set(128) == pytest.approx(4 * default_eps_set(256))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2.5, 2.5))
def test_step_is_monotone(seed, c):
    # u <= w pointwise implies T u <= T w
    sys = SystemSpec.pendulum()
    rng = np.random.default_rng(seed)
    # smooth, gentle data keeps every minimizer inside the velocity window
    u = random_seed_function(64, rng, scale=0.02)
    x = np.arange(64) / 64
    w = u + abs(rng.normal()) + 0.05 * (1.0 + np.cos(2 * np.pi * x))
    Tu = lax_oleinik_step(sys, ValueFunction(u, c), c, CFG).samples
    Tw = lax_oleinik_step(sys, ValueFunction(w, c), c, CFG).samples
    assert np.all(Tu <= Tw + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2.5, 2.5))
def test_step_is_sup_norm_contraction(seed, c):
    sys = SystemSpec.pendulum()
    rng = np.random.default_rng(seed)
    u = random_seed_function(64, rng, scale=0.02)
    w = random_seed_function(64, rng, scale=0.02)
    Tu = lax_oleinik_step(sys, ValueFunction(u, c), c, CFG, NEGATIVE).samples
    Tw = lax_oleinik_step(sys, ValueFunction(w, c), c, CFG, NEGATIVE).samples
    assert np.max(np.abs(Tu - Tw)) <= np.max(np.abs(u - w)) + 1e-12

import numpy as np
import pytest

from fluctfield.errors import BoundaryLeakError, DivergenceError, StabilityError
from fluctfield.observables import expect_classical
from fluctfield.phase_space import ModelParams, default_grid, make_gaussian_q
from fluctfield.transport import (BLOCK, Direction, FieldConfiguration, Order, StepDirection,
                                  block_update, check_stability, cubic_shift, evolve_q, force,
                                  laplacian, liouville_rhs, spectral_shift, stability_margin,
                                  step_update)


def harmonic_block_matrix(m2, eps):
    """kick(eps) drift(2 eps) kick(eps) for F = -m2 sigma, acting on (sigma, pi)."""
    kick = np.array([[1.0, 0.0], [-eps * m2, 1.0]])
    drift = np.array([[1.0, 2 * eps], [0.0, 1.0]])
    return kick @ drift @ kick


def test_block_is_kick_drift_kick():
    p = ModelParams(1.3, 0.0, 0, 0.05)
    c = FieldConfiguration(np.array([0.7]), np.array([-0.2]))
    out = block_update(c, p)
    expected = harmonic_block_matrix(1.3, 0.05) @ np.array([0.7, -0.2])
    assert np.allclose([out.sigma[0], out.pi[0]], expected, rtol=1e-15, atol=1e-16)
    assert out.time == pytest.approx(0.1)


def test_substep_orders():
    p = ModelParams(1.0, 0.0, 0, 0.1)
    c = FieldConfiguration(np.array(1.0), np.array(0.0))
    a = step_update(c, p, StepDirection(Order.PI_FIRST))
    assert (a.sigma, a.pi) == (pytest.approx(0.99), pytest.approx(-0.1))
    b = step_update(c, p, StepDirection(Order.SIGMA_FIRST))
    assert (b.sigma, b.pi) == (pytest.approx(1.0), pytest.approx(-0.1))
    assert BLOCK[0].order is Order.PI_FIRST and BLOCK[1].order is Order.SIGMA_FIRST


def test_backward_substep_inverts_forward():
    rng = np.random.default_rng(1)
    p = ModelParams(1.0, 0.8, 1, 0.1, laplacian_prefactor=0.125)
    c = FieldConfiguration(rng.normal(size=12), rng.normal(size=12))
    for order in Order:
        fwd = step_update(c, p, StepDirection(order))
        back = step_update(fwd, p, StepDirection(order, Direction.BACKWARD))
        assert np.allclose(back.sigma, c.sigma, atol=1e-15)
        assert np.allclose(back.pi, c.pi, atol=1e-15)
        assert back.time == pytest.approx(0.0, abs=1e-15)


def test_laplacian_plane_wave_eigenvalue():
    n, eps, pref = 32, 0.2, 0.5
    p = ModelParams(1.0, 0.0, 1, eps, laplacian_prefactor=pref)
    k = 2 * np.pi * 3 / n
    s = np.cos(k * np.arange(n))
    expected = -pref / eps**2 * 4 * np.sin(k / 2) ** 2
    assert np.allclose(laplacian(s, p), expected * s, atol=1e-12)


def test_force_includes_quartic_term():
    p = ModelParams(2.0, 0.6, 0, 0.1)
    s = np.array([-1.0, 0.5, 2.0])
    assert np.allclose(force(s, p), -2.0 * s - 0.3 * s**3)


def test_laplacian_acts_on_trailing_axes_only():
    rng = np.random.default_rng(2)
    p = ModelParams(1.0, 0.0, 2, 0.1)
    stack = rng.normal(size=(3, 5, 6))
    assert np.allclose(laplacian(stack, p)[1], laplacian(stack[1], p))


def test_stability_bound_matches_linear_growth():
    # eps^2 omega_max^2 < 1 is the stability region of the linear block map
    for pref, stable in [(0.5, False), (0.2, True), (0.125, True)]:
        p = ModelParams(1.0, 0.0, 1, 0.1, laplacian_prefactor=pref)
        assert (stability_margin(p) < 1) == stable
        n = 16
        c = FieldConfiguration(np.cos(np.pi * np.arange(n)) * 1e-3, np.zeros(n))
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(60):
                c = block_update(c, p)
        grew = np.abs(c.sigma).max() > 1.0
        assert grew != stable
        if stable:
            check_stability(p)
        else:
            with pytest.raises(StabilityError):
                check_stability(p)


def test_divergence_reports_member():
    p = ModelParams(1.0, 1.0, 0, 0.5)
    c = FieldConfiguration(np.array([0.1, 1e100, 0.2]), np.zeros(3))
    with pytest.raises(DivergenceError) as info, np.errstate(over="ignore", invalid="ignore"):
        block_update(c, p, step_index=7)
    assert info.value.member == 1
    assert info.value.step == 7


def test_spectral_shift_is_exact_on_trig_polynomials():
    x = np.arange(16) * 0.25
    f = np.cos(2 * np.pi * x / 4.0) + 0.3 * np.sin(2 * np.pi * 3 * x / 4.0)
    out = spectral_shift(f, 0, 0.25, 0.37)
    g = np.cos(2 * np.pi * (x - 0.37) / 4.0) + 0.3 * np.sin(2 * np.pi * 3 * (x - 0.37) / 4.0)
    assert np.allclose(out, g, atol=1e-14)


def test_cubic_shift_exact_on_cubics_and_by_whole_cells():
    x = np.arange(40) * 0.1
    f = 0.5 * x**3 - x
    out = cubic_shift(f, 0, 0.1, 0.043)
    inner = slice(3, -3)
    assert np.allclose(out[inner], (0.5 * (x - 0.043) ** 3 - (x - 0.043))[inner], atol=1e-12)
    assert np.allclose(cubic_shift(f, 0, 0.1, 0.2), np.roll(f, 2), atol=1e-12)


def test_harmonic_transport_follows_linear_map():
    p = ModelParams(1.0, 0.0, 0, 0.02)
    g = default_grid(0.5, 0.5, count=64, span=12)
    q = make_gaussian_q(g, 1.0, 0.0, 0.5, 0.5, min_support=6)
    n = 50
    q_end, defects = evolve_q(q, p, n)
    m = np.linalg.matrix_power(harmonic_block_matrix(1.0, 0.02), n)
    mean = m @ np.array([1.0, 0.0])
    cov = m @ np.diag([0.25, 0.25]) @ m.T
    ms = expect_classical(q_end, lambda s, pp: s[0])
    mp = expect_classical(q_end, lambda s, pp: pp[0])
    assert [ms, mp] == pytest.approx(mean, abs=1e-9)
    vs = expect_classical(q_end, lambda s, pp: s[0] ** 2) - ms**2
    cs = expect_classical(q_end, lambda s, pp: s[0] * pp[0]) - ms * mp
    assert [vs, cs] == pytest.approx([cov[0, 0], cov[0, 1]], abs=1e-9)
    assert np.abs(defects).max() < 1e-12


def test_cubic_transport_is_less_accurate_but_close():
    p = ModelParams(1.0, 0.0, 0, 0.02)
    g = default_grid(0.5, 0.5, count=64, span=12)
    q = make_gaussian_q(g, 1.0, 0.0, 0.5, 0.5, min_support=6)
    a, _ = evolve_q(q, p, 20, interpolation="spectral")
    b, db = evolve_q(q, p, 20, interpolation="cubic")
    diff = np.abs(a.values - b.values).max() / np.abs(a.values).max()
    assert 1e-8 < diff < 1e-2
    assert np.abs(db).max() > 1e-12  # renormalisation is doing work


def test_boundary_leak_is_detected():
    p = ModelParams(1.0, 0.0, 0, 0.05)
    g = default_grid(0.5, 0.5, count=32, span=7)
    q = make_gaussian_q(g, 1.5, 0.0, 0.5, 0.5, min_support=3)
    with pytest.raises(BoundaryLeakError):
        evolve_q(q, p, 40)


def test_harmonic_ring_is_stationary():
    # q depending on sigma^2 + pi^2 only is invariant under the m = 1 harmonic flow
    p = ModelParams(1.0, 0.0, 0, 0.01)
    q = make_gaussian_q(default_grid(1.0, 1.0, count=64, span=11), 0.0, 0.0, 1.0, 1.0)
    rhs = liouville_rhs(q, p)
    assert np.abs(rhs).max() < 1e-10 * np.abs(q.values).max()


def test_liouville_rhs_matches_transport_rate():
    p = ModelParams(1.0, 0.3, 0, 1e-4)
    q = make_gaussian_q(default_grid(0.5, 0.5, count=64, span=12), 0.6, 0.2, 0.5, 0.5)
    q1, _ = evolve_q(q, p, 1)
    rate = (q1.values - q.values) / (2 * p.eps)
    rhs = liouville_rhs(q, p)
    assert np.abs(rate - rhs).max() < 1e-3 * np.abs(rhs).max()

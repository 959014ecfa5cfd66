import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluctfield.errors import RepresentationError
from fluctfield.phase_space import ClassicalWaveFunction, ComplexWaveFunction, default_grid, make_gaussian_q
from fluctfield.spectral import (fourier_pi_to_zeta, fourier_zeta_to_pi, from_mirror_view, mirrored,
                                 selection_rule_violation, time_reverse, to_mirror_view)


def random_real_q(seed, count=16, sites=1):
    rng = np.random.default_rng(seed)
    g = default_grid(1.0, 1.0, count=count, span=4, sites=sites)
    q = ClassicalWaveFunction(g, rng.normal(size=g.shape))
    return q.copy(values=q.values / np.sqrt(q.norm_sq()))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_transform_is_unitary_and_obeys_selection_rule(seed, sites):
    q = random_real_q(seed, count=8 if sites == 2 else 16, sites=sites)
    psi = fourier_pi_to_zeta(q)
    assert psi.norm_sq() == pytest.approx(1.0, abs=1e-12)
    assert selection_rule_violation(psi) < 1e-12
    back = fourier_zeta_to_pi(psi)
    assert np.abs(back.values - q.values).max() < 1e-12


def test_gaussian_transform_closed_form():
    # q ~ exp(-pi^2/4w^2) transforms to a Gaussian in zeta with |psi|^2 variance 1/(4 w^2)
    w = 0.8
    g = default_grid(1.0, w, count=64, span=10)
    q = make_gaussian_q(g, 0.0, 0.0, 1.0, w)
    psi = fourier_pi_to_zeta(q)
    z = g.zeta_nodes
    prob = np.sum(np.abs(psi.values) ** 2, axis=0) * g.psi_weight
    assert np.sum(prob * z**2) == pytest.approx(1 / (4 * w**2), rel=1e-10)
    assert np.abs(psi.values.imag).max() < 1e-14  # even in pi -> real in zeta


def test_mean_momentum_becomes_phase():
    g = default_grid(1.0, 0.5, count=64, span=12)
    q = make_gaussian_q(g, 0.0, 0.7, 1.0, 0.5)
    psi = fourier_pi_to_zeta(q).values[32]
    z = g.zeta_nodes
    centre = np.abs(z) < 2.0
    phase = np.unwrap(np.angle(psi[centre]))
    slope = np.polyfit(z[centre], phase, 1)[0]
    assert slope == pytest.approx(0.7, rel=1e-10)


def test_inverse_rejects_states_violating_selection_rule():
    q = random_real_q(3)
    psi = fourier_pi_to_zeta(q)
    bad = psi.copy(values=psi.values * np.exp(0.3j))
    with pytest.raises(RepresentationError):
        fourier_zeta_to_pi(bad)


def test_mirrored_flips_zeta():
    g = default_grid(1.0, 1.0, count=8, span=3)
    z = np.broadcast_to(g.zeta(0), g.shape).astype(complex)
    psi = ComplexWaveFunction(g, z.copy())
    m = mirrored(psi)
    assert np.allclose(m[:, 1:], -z[:, 1:])


def test_time_reversal_conjugates_psi():
    q = make_gaussian_q(default_grid(1.0, 1.0, count=32, span=9), 0.3, 0.6, 1.0, 1.0)
    rev = time_reverse(q)
    assert np.allclose(fourier_pi_to_zeta(rev).values, np.conj(fourier_pi_to_zeta(q).values), atol=1e-14)
    assert np.array_equal(time_reverse(rev).values, q.values)


def test_mirror_view_conjugation():
    q = random_real_q(5)
    view = to_mirror_view(fourier_pi_to_zeta(q))
    assert view.conjugation_defect() < 1e-13
    assert np.allclose(view.phi() - view.chi(), view.grid.zeta(0))
    assert np.allclose(0.5 * (view.phi() + view.chi()), view.grid.sigma(0))
    assert from_mirror_view(view) is view.psi

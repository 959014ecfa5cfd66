"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line with the measured value and the
threshold, then asserts.  Run with ``pytest tests/test_acceptance.py -v``.
"""

import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from fluctfield.automaton import InitialSpec, ensemble_expect, energy_drift, run_automaton, sample_initial
from fluctfield.cli import main
from fluctfield.effective_action import (coefficient_report, minkowski_action, one_loop_phi4_coefficient,
                                         saddle_consistency, solve_mirror_series, tree_level_delta_s)
from fluctfield.observables import (band_limit_defect, chi_hat, commutator_apply, expect_classical,
                                    expect_quantum, monomial, p_hat, phi_hat, pi_hat,
                                    roughness_derivative_route, sigma_hat, zeta_band_edge_weight, zeta_hat)
from fluctfield.phase_space import Axis, ModelParams, PhaseGrid, default_grid, make_gaussian_q
from fluctfield.schroedinger import HamiltonianSpec, evolve_psi, route_consistency
from fluctfield.spectral import fourier_pi_to_zeta, selection_rule_violation
from fluctfield.transport import evolve_q

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} [{label}] {detail}")
        assert ok, detail
    return emit


def block_matrix(m2, eps):
    """Free single-site block kick(eps) drift(2 eps) kick(eps) on (sigma, pi)."""
    kick = np.array([[1.0, 0.0], [-eps * m2, 1.0]])
    drift = np.array([[1.0, 2 * eps], [0.0, 1.0]])
    return kick @ drift @ kick


def test_01_rule_equivalence(report):
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(20):
        ws, wp = rng.uniform(0.5, 1.5, 2)
        ms, mp = rng.uniform(-0.7, 0.7, 2) * (ws, wp)
        q = make_gaussian_q(default_grid(ws, wp, count=64, span=12), ms, mp, ws, wp, min_support=8)
        psi = fourier_pi_to_zeta(q)
        for a in range(5):
            for b in range(5 - a):
                c = expect_classical(q, lambda s, p: s[0] ** a * p[0] ** b)
                d = abs(expect_quantum(psi, monomial(a, b)) - c) / max(1.0, abs(c))
                worst = max(worst, d)
    report("01 rule equivalence", worst <= 1e-8, f"max deviation {worst:.2e} over 20 states x 15 monomials (tol 1e-8)")


def identity_defects(q):
    psi = fourier_pi_to_zeta(q)
    z2_a = roughness_derivative_route(q)
    z2_b = expect_quantum(psi, [zeta_hat(), zeta_hat()])
    s = expect_classical(q, lambda x, y: x[0])
    var_s = expect_classical(q, lambda x, y: x[0] ** 2) - s**2
    phi = expect_quantum(psi, phi_hat())
    var_phi = expect_quantum(psi, [phi_hat(), phi_hat()]) - phi**2
    return {
        "zeta_mean": abs(expect_quantum(psi, zeta_hat())),
        "zeta_sq_routes": abs(z2_a - z2_b),
        "dispersion": abs(var_phi - var_s - 0.25 * z2_a),
        "field_means": max(abs(phi - s), abs(expect_quantum(psi, chi_hat()) - s)),
        "band_edge": zeta_band_edge_weight(psi) / max(1.0, z2_a),
    }


def test_02_statistical_identities(report):
    tol = {"zeta_mean": 1e-10, "zeta_sq_routes": 1e-8, "dispersion": 1e-8, "field_means": 1e-12, "band_edge": 1e-8}
    worst = dict.fromkeys(tol, 0.0)
    eps = 0.01
    n_blocks = int(round(10 * 2 * np.pi / (2 * eps)))  # ten periods of the m = 1 oscillator
    for lam in (0.0, 0.5):
        grid = default_grid(0.2, 0.2, count=256, span=10)
        q = make_gaussian_q(grid, 0.3, 0.0, 0.2, 0.2, min_support=6)

        def track(n, state):
            if n % 157 == 0 or n == n_blocks:
                for k, v in identity_defects(state).items():
                    worst[k] = max(worst[k], v)

        track(0, q)
        evolve_q(q, ModelParams(1.0, lam, 0, eps), n_blocks, callback=track)
    ok = all(worst[k] <= tol[k] for k in tol)
    detail = ", ".join(f"{k} {worst[k]:.1e} (tol {tol[k]:.0e})" for k in tol)
    report("02 statistical identities", ok, detail + f"; t up to {2 * eps * n_blocks:.2f}, lambda 0 and 0.5")


def test_03_selection_rule(report):
    p = ModelParams(1.0, 0.5, 0, 0.01)
    q = make_gaussian_q(default_grid(0.3, 0.3, count=128, span=24), 0.6, 0.2, 0.3, 0.3, min_support=6)
    worst = {"liouville": 0.0, "schroedinger": 0.0}

    def on_q(n, s):
        if n % 10 == 0:
            worst["liouville"] = max(worst["liouville"], selection_rule_violation(fourier_pi_to_zeta(s)))

    def on_psi(n, s):
        worst["schroedinger"] = max(worst["schroedinger"], selection_rule_violation(s))

    evolve_q(q, p, 1000, callback=on_q)
    evolve_psi(fourier_pi_to_zeta(q), HamiltonianSpec(p), 2 * p.eps, 1000, callback=on_psi)
    m = max(worst.values())
    report("03 selection rule", m <= 1e-9,
           f"liouville {worst['liouville']:.1e}, schroedinger {worst['schroedinger']:.1e} over 1000 steps (tol 1e-9)")


def commutator_states():
    out = []
    for ms, mp, ws, wp in [(0.2, 0.1, 1.0, 2**-0.5), (-0.4, 0.3, 0.8, 0.6), (0.0, 0.0, 1.2, 0.9)]:
        q = make_gaussian_q(default_grid(ws, wp, count=96, span=12), ms * ws, mp * wp, ws, wp, min_support=8)
        out.append(fourier_pi_to_zeta(q))
    return out


def test_04a_sigma_pi_commutator(report):
    states = commutator_states()
    r = max(np.abs(commutator_apply(sigma_hat(), pi_hat(), s).values).max() for s in states)
    band = max(band_limit_defect(s) for s in states)
    report("04a [sigma, pi] = 0", r <= 1e-10, f"max |[sigma,pi] psi| {r:.1e} (tol 1e-10), band-limit defect {band:.1e}")


def test_04b_phi_pi_commutator(report):
    states = commutator_states()
    minus = max(np.abs(commutator_apply(phi_hat(), pi_hat(), s).values + 0.5j * s.values).max() for s in states)
    plus = max(np.abs(commutator_apply(phi_hat(), pi_hat(), s).values - 0.5j * s.values).max() for s in states)
    report("04b [phi, pi] = -i/2", minus <= 1e-8,
           f"max |[phi,pi] psi + (i/2) psi| {minus:.2e} (tol 1e-8); for comparison |... - (i/2) psi| {plus:.1e}")


def test_04c_phi_p_commutator(report):
    states = commutator_states()
    r = max(np.abs(commutator_apply(phi_hat(), p_hat(), s).values - 1j * s.values).max() for s in states)
    report("04c [phi, p] = i", r <= 1e-8, f"max |[phi,p] psi - i psi| {r:.1e} (tol 1e-8)")


def test_05_route_consistency(report):
    q = make_gaussian_q(default_grid(0.5, 0.5, count=64, span=10), 1.0, 0.0, 0.5, 0.5, min_support=3)
    eps = [1e-2, 5e-3, 2.5e-3]
    parts, ok = [], True
    for lam in (0.0, 0.1):
        dev = [route_consistency(q, ModelParams(1.0, lam, 0, e), 0.2) for e in eps]
        order = float(np.polyfit(np.log(eps), np.log(dev), 1)[0])
        decreasing = dev[0] > dev[1] > dev[2]
        ok &= decreasing and order >= 1.0
        parts.append(f"lambda {lam}: deviations {', '.join(f'{d:.2e}' for d in dev)}, order {order:.3f}")
    report("05 route consistency", ok, "; ".join(parts) + " (need order >= 1)")


def test_06_monte_carlo_matches_grid(report):
    p = ModelParams(1.0, 0.5, 0, 0.01)
    mu, w = 1.0, 0.5
    # sigma tails at z ~ 4.5 carry quartic energy out to |pi| ~ 6, hence the wider pi axis
    grid = PhaseGrid(Axis(0.0, 10 / 128, 128), Axis(0.0, 16 / 128, 128))
    q = make_gaussian_q(grid, mu, 0.0, w, w, min_support=6)
    ens = sample_initial(InitialSpec((), mu, 0.0, w, w), 100_000, seed=2025)
    every, zs = 16, []
    for k in range(21):
        if k:
            q, _ = evolve_q(q, p, every)
            ens = run_automaton(ens, p, every)
        g1 = expect_classical(q, lambda s, pp: s[0])
        g2 = expect_classical(q, lambda s, pp: s[0] ** 2)
        e1 = ensemble_expect(ens, lambda s, pp: s)
        e2 = ensemble_expect(ens, lambda s, pp: s**2)
        if k:
            zs.append(((e1.mean - g1) / e1.std_error, (e2.mean - g2) / e2.std_error))
    zmax = float(np.abs(zs).max())
    report("06 MC vs grid", zmax <= 3.0,
           f"max |z| {zmax:.2f} for <sigma>, <sigma^2> at {len(zs)} times up to t={q.time:.2f}, n=1e5 (tol 3)")


def test_07_free_theory_exactness(report):
    eps, n_blocks = 0.01, 1000
    m = block_matrix(1.0, eps)
    ms, mp, ws, wp = 1.0, -0.3, 0.5, 0.7
    q = make_gaussian_q(default_grid(0.6, 0.6, count=64, span=12), ms, mp, ws, wp, min_support=6)
    worst = [0.0]

    def track(n, s):
        if n % 50:
            return
        f = lambda fn: expect_classical(s, fn)
        a, b = f(lambda x, y: x[0]), f(lambda x, y: y[0])
        cov = np.array([[f(lambda x, y: x[0] ** 2) - a * a, f(lambda x, y: x[0] * y[0]) - a * b],
                        [0.0, f(lambda x, y: y[0] ** 2) - b * b]])
        mn = np.linalg.matrix_power(m, n)
        mean_o = mn @ [ms, mp]
        cov_o = mn @ np.diag([ws**2, wp**2]) @ mn.T
        # relative to the moment scale, since the means pass through zero
        rm = np.abs([a, b] - mean_o).max() / np.sqrt(np.sum(mean_o**2) + np.trace(cov_o))
        rc = np.abs(np.triu(cov - cov_o)).max() / np.sqrt(np.sum(cov_o**2))
        worst[0] = max(worst[0], rm, rc)

    evolve_q(q, ModelParams(1.0, 0.0, 0, eps), n_blocks, callback=track)

    # ensemble engine on a D = 1 chain: sample moments follow the dense linear map
    n_sites = 8
    p = ModelParams(1.0, 0.0, 1, 0.1, laplacian_prefactor=0.125)
    ens = sample_initial(InitialSpec((n_sites,), 0.4, 0.1, 0.6, 0.3), 4096, seed=17)
    lap = p.laplacian_prefactor / p.eps**2 * (np.roll(np.eye(n_sites), 1, 0) + np.roll(np.eye(n_sites), -1, 0) - 2 * np.eye(n_sites))
    force = lap - p.mass_squared * np.eye(n_sites)
    eye, zero = np.eye(n_sites), np.zeros((n_sites, n_sites))
    kick = np.block([[eye, zero], [p.eps * force, eye]])
    drift = np.block([[eye, 2 * p.eps * eye], [zero, eye]])
    big = np.linalg.matrix_power(kick @ drift @ kick, n_blocks)
    x0 = np.concatenate([ens.sigma, ens.pi], axis=1)
    out = run_automaton(ens, p, n_blocks)
    x1 = np.concatenate([out.sigma, out.pi], axis=1)
    mean_o, cov_o = big @ x0.mean(0), big @ np.cov(x0.T) @ big.T
    scale = np.sqrt(np.sum(mean_o**2) + np.trace(cov_o))
    ens_err = max(np.abs(x1.mean(0) - mean_o).max() / scale, np.abs(np.cov(x1.T) - cov_o).max() / np.abs(cov_o).max())
    ok = worst[0] <= 1e-4 and ens_err <= 1e-4
    report("07 free-theory exactness", ok,
           f"grid engine {worst[0]:.1e}, ensemble chain {ens_err:.1e} over {n_blocks} steps (tol 1e-4 relative)")


def test_08_automaton_structure(report):
    chain = ModelParams(1.0, 0.5, 1, 0.1, laplacian_prefactor=0.125)
    ens = sample_initial(InitialSpec((64,), 0.0, 0.0, 0.5, 0.5), 16, seed=11)
    back = run_automaton(run_automaton(ens, chain, 10_000), chain, 10_000, backward=True)
    rev = max(np.abs(back.sigma - ens.sigma).max(), np.abs(back.pi - ens.pi).max())

    kicked = sample_initial(InitialSpec((64,), 0.0, 0.0, 0.5, 0.5), 16, seed=11)
    kicked.sigma[:, 32] += 1e-3
    cone_ok = True
    a, b = ens, kicked
    dist = np.abs(np.arange(64) - 32)
    for n in range(1, 31):
        a, b = run_automaton(a, chain, 1), run_automaton(b, chain, 1)
        outside_s, outside_p = dist > n, dist > n + 1
        cone_ok &= np.array_equal(a.sigma[:, outside_s], b.sigma[:, outside_s])
        cone_ok &= np.array_equal(a.pi[:, outside_p], b.pi[:, outside_p])
        cone_ok &= bool(np.all(a.sigma[:, dist == n] != b.sigma[:, dist == n]))

    start = sample_initial(InitialSpec((), 0.5, 0.0, 1.0, 1.0), 64, seed=5)
    drifts = []
    for eps in (0.02, 0.01):
        p = ModelParams(1.0, 0.5, 0, eps)
        hist = [start]
        run_automaton(start, p, int(round(20 / (2 * eps))), callback=lambda n, e: hist.append(e))
        drifts.append(np.abs(energy_drift(hist, p)).max())
    ratio = drifts[0] / drifts[1]
    ok = rev <= 1e-10 and cone_ok and abs(ratio - 4) <= 0.5
    report("08 automaton structure", ok,
           f"reversibility {rev:.1e} after 1e4+1e4 blocks (tol 1e-10); light cone bit-exact {cone_ok}; "
           f"energy drift ratio {ratio:.3f} (4 +- 0.5)")


def test_09_tree_level_series(report):
    lam, m2 = Fraction(1, 2), Fraction(3, 2)
    p = ModelParams(float(m2), float(lam), 0, 0.1)
    chi = solve_mirror_series(p, 23)
    ds = tree_level_delta_s(chi, p, 26)
    exact = chi[3] == lam / (8 * m2) and ds[6] == -lam**2 / (128 * m2)
    unit = ModelParams(1.0, 1.0, 0, 0.1)
    phis = [0.05, 0.1, 0.2, 0.1**0.5]
    rel = max(saddle_consistency(unit, f).relative_deviation for f in phis)
    rep = coefficient_report(unit, 14)
    logged = "; ".join(
        f"{name} phi^{k}: computed {rep['coefficients_exact'][name][k]} vs reference "
        f"{rep['reference_values_exact'][name][k]}"
        for name in ("chi_bar", "delta_s0") for k in rep["reference_values"][name]
    )
    report("09 tree-level series", exact and rel <= 1e-6,
           f"leading coefficients exact {exact}; series vs stationarization {rel:.1e} for lambda phi^2/m^2 <= 0.1 "
           f"(tol 1e-6); {logged}")


def test_10_one_loop_scaling(report):
    eps = np.array([0.5, 0.25, 0.125])
    # fixed physical extent 2 in every direction; the finest lattice is 16^4
    coeff = [one_loop_phi4_coefficient(ModelParams(1.0, 1.0, 3, e), (int(round(2 / e)),) * 4) for e in eps]
    slope = float(np.polyfit(np.log(eps), np.log(coeff), 1)[0])
    report("10 one-loop scaling", abs(slope + 2) <= 0.3,
           f"log-log slope {slope:.3f} on lattices 4^4, 8^4, 16^4 (need -2 +- 0.3)")


def test_11_action_antisymmetry(report):
    rng = np.random.default_rng(11)
    p = ModelParams(1.0, 0.7, 2, 0.1, laplacian_prefactor=0.1)
    worst = 0.0
    for _ in range(100):
        phi, chi = rng.normal(size=(2, 6, 4, 5))
        worst = max(worst, abs(minkowski_action(phi, chi, p).total + minkowski_action(chi, phi, p).total))
    report("11 action antisymmetry", worst == 0.0, f"max |S(phi,chi) + S(chi,phi)| = {worst!r} on 100 trajectories")


def test_12_determinism(report, tmp_path):
    def files(d):
        return {f.name: f.read_bytes() for f in sorted(Path(d).iterdir()) if f.name != "manifest.json"}

    cfg = json.loads((CONFIGS / "ensemble_chain.json").read_text())
    cfg["n_steps"] = 60
    path = tmp_path / "ens.json"
    path.write_text(json.dumps(cfg))
    runs = {}
    for name, threads in [("a", 1), ("b", 1), ("c", 4)]:
        assert main(["run-ensemble", "--config", str(path), "--output", str(tmp_path / name),
                     "--threads", str(threads)]) == 0
        runs[name] = files(tmp_path / name)
    liou = []
    for name in ("l1", "l2"):
        assert main(["evolve-liouville", "--config", str(CONFIGS / "harmonic_liouville.json"),
                     "--output", str(tmp_path / name)]) == 0
        liou.append(files(tmp_path / name))
    same = runs["a"] == runs["b"] == runs["c"] and liou[0] == liou[1]
    digests = {json.loads((tmp_path / n / "manifest.json").read_text())["files"]["ensemble.csv"] for n in "abc"}
    report("12 determinism", same and len(digests) == 1,
           f"ensemble reruns and 1 vs 4 threads byte-identical {runs['a'] == runs['b'] == runs['c']}; "
           f"liouville reruns byte-identical {liou[0] == liou[1]}")

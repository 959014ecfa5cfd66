"""Desk-scale cross-check suite behind the ``validate`` subcommand.

Each check returns a :class:`CheckResult`; tolerances come from a mapping
so callers (and config files) can tighten or relax them.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .automaton import InitialSpec, run_automaton, sample_initial
from .effective_action import (minkowski_action, saddle_consistency, solve_mirror_series,
                               tree_level_delta_s)
from .observables import (chi_hat, commutator_apply, expect_classical, expect_quantum, monomial,
                          p_hat, phi_hat, pi_hat, roughness_derivative_route, sigma_hat, zeta_hat,
                          zeta_roughness)
from .phase_space import ModelParams, default_grid, make_gaussian_q
from .schroedinger import HamiltonianSpec, Outer, evolve_psi, route_consistency
from .spectral import fourier_pi_to_zeta, selection_rule_violation
from .transport import evolve_q

DEFAULT_TOLERANCES = {
    "rule_equivalence": 1e-8,
    "zeta_mean": 1e-10,
    "zeta_sq_routes": 1e-8,
    "dispersion": 1e-8,
    "field_means": 1e-12,
    "selection_rule": 1e-9,
    "commutator_sigma_pi": 1e-10,
    "commutator_phi_pi": 1e-8,
    "commutator_phi_p": 1e-8,
    "route_order": 1.0,
    "reversibility": 1e-10,
    "saddle": 1e-6,
    "antisymmetry": 0.0,
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    note: str = ""

    def as_dict(self):
        return asdict(self)


def _upper(name, value, tol, note=""):
    return CheckResult(name, float(value), float(tol), bool(value <= tol), note)


def _test_state(seed=0, count=64):
    rng = np.random.default_rng(seed)
    ws, wp = rng.uniform(0.6, 1.2, 2)
    grid = default_grid(ws, wp, count=count, span=11)
    ms, mp = rng.uniform(-0.5, 0.5, 2)
    return make_gaussian_q(grid, ms * ws, mp * wp, ws, wp, min_support=8)


def check_rule_equivalence(tol, n_states=3):
    worst = 0.0
    for k in range(n_states):
        q = _test_state(k)
        psi = fourier_pi_to_zeta(q)
        for a in range(5):
            for b in range(5 - a):
                c = expect_classical(q, lambda s, p: s[0] ** a * p[0] ** b)
                qv = expect_quantum(psi, monomial(a, b))
                worst = max(worst, abs(c - qv) / max(1.0, abs(c)))
    return _upper("rule_equivalence", worst, tol)


def check_identities(tols, coupling=0.5, n_blocks=50):
    params = ModelParams(1.0, coupling, 0, 0.02)
    grid = default_grid(0.5, 0.5, count=96, span=14)
    q = make_gaussian_q(grid, 0.4, 0.0, 0.5, 0.5, min_support=8)
    q_end, _ = evolve_q(q, params, n_blocks)
    out = {"zeta_mean": 0.0, "zeta_sq_routes": 0.0, "dispersion": 0.0, "field_means": 0.0}
    for state in (q, q_end):
        psi = fourier_pi_to_zeta(state)
        out["zeta_mean"] = max(out["zeta_mean"], abs(expect_quantum(psi, zeta_hat())))
        z2 = expect_quantum(psi, [zeta_hat(), zeta_hat()])
        out["zeta_sq_routes"] = max(out["zeta_sq_routes"], abs(roughness_derivative_route(state) - z2))
        phi_m = expect_quantum(psi, phi_hat())
        var_phi = expect_quantum(psi, [phi_hat(), phi_hat()]) - phi_m**2
        s_m = expect_classical(state, lambda s, p: s[0])
        var_s = expect_classical(state, lambda s, p: s[0] ** 2) - s_m**2
        out["dispersion"] = max(out["dispersion"], abs(var_phi - var_s - 0.25 * zeta_roughness(state)))
        chi_m = expect_quantum(psi, chi_hat())
        out["field_means"] = max(out["field_means"], abs(phi_m - s_m), abs(chi_m - s_m))
    return [_upper(k, v, tols[k]) for k, v in out.items()]


def check_selection_rule(tol, n_blocks=200):
    params = ModelParams(1.0, 0.5, 0, 0.02)
    grid = default_grid(0.5, 0.5, count=64, span=12)
    q = make_gaussian_q(grid, 0.3, 0.0, 0.5, 0.5, min_support=8)
    worst = [0.0]

    def track_q(n, state):
        worst[0] = max(worst[0], selection_rule_violation(fourier_pi_to_zeta(state)))

    def track_psi(n, psi):
        worst[0] = max(worst[0], selection_rule_violation(psi))

    evolve_q(q, params, n_blocks, callback=track_q)
    evolve_psi(fourier_pi_to_zeta(q), HamiltonianSpec(params), 2 * params.eps, n_blocks, callback=track_psi)
    return _upper("selection_rule", worst[0], tol)


def check_commutators(tols):
    grid = default_grid(1.0, 2**-0.5, count=96, span=12)
    q = make_gaussian_q(grid, 0.2, 0.1, 1.0, 2**-0.5, min_support=8)
    psi = fourier_pi_to_zeta(q)
    v = psi.values
    sp = np.abs(commutator_apply(sigma_hat(), pi_hat(), psi).values).max()
    fp = commutator_apply(phi_hat(), pi_hat(), psi).values
    fpp = commutator_apply(phi_hat(), p_hat(), psi).values
    return [
        _upper("commutator_sigma_pi", sp, tols["commutator_sigma_pi"]),
        _upper("commutator_phi_pi", np.abs(fp - 0.5j * v).max(), tols["commutator_phi_pi"],
               "checked as [phi, pi] = +i/2, the sign implied by pi = -i d/dzeta"),
        _upper("commutator_phi_p", np.abs(fpp - 1j * v).max(), tols["commutator_phi_p"]),
    ]


def check_route_order(min_order):
    grid = default_grid(0.5, 0.5, count=64, span=10)
    q = make_gaussian_q(grid, 1.0, 0.0, 0.5, 0.5, min_support=3)
    eps = [1e-2, 5e-3, 2.5e-3]
    dev = [route_consistency(q, ModelParams(1.0, 0.1, 0, e), 0.2, outer=Outer.KINETIC) for e in eps]
    order = float(np.polyfit(np.log(eps), np.log(dev), 1)[0])
    return CheckResult("route_order", order, min_order, bool(order >= min_order), "observed order, must be >=")


def check_reversibility(tol, n_blocks=1000):
    params = ModelParams(1.0, 0.5, 1, 0.1, laplacian_prefactor=0.125)
    ens = sample_initial(InitialSpec((16,), 0.0, 0.0, 1.0, 1.0), 8, seed=7)
    fwd = run_automaton(ens, params, n_blocks)
    back = run_automaton(fwd, params, n_blocks, backward=True)
    err = max(np.abs(back.sigma - ens.sigma).max(), np.abs(back.pi - ens.pi).max())
    return _upper("reversibility", err, tol)


def check_saddle(tol):
    params = ModelParams(1.0, 1.0)
    chi = solve_mirror_series(params, 23)
    ds = tree_level_delta_s(chi, params, 26)
    exact = chi[3] == params.coupling / 8 and ds[6] == -params.coupling**2 / 128
    rel = saddle_consistency(params, 0.2).relative_deviation
    return [
        CheckResult("series_leading", 0.0 if exact else 1.0, 0.0, bool(exact)),
        _upper("saddle", rel, tol),
    ]


def check_antisymmetry(tol, n=10):
    rng = np.random.default_rng(3)
    params = ModelParams(1.0, 0.7, 1, 0.1)
    worst = 0.0
    for _ in range(n):
        phi, chi = rng.normal(size=(2, 12, 8))
        a = minkowski_action(phi, chi, params).total
        b = minkowski_action(chi, phi, params).total
        worst = max(worst, abs(a + b))
    return _upper("antisymmetry", worst, tol)


def run_suite(tolerances=None):
    tols = dict(DEFAULT_TOLERANCES)
    tols.update(tolerances or {})
    results = [check_rule_equivalence(tols["rule_equivalence"])]
    results += check_identities(tols)
    results.append(check_selection_rule(tols["selection_rule"]))
    results += check_commutators(tols)
    results.append(check_route_order(tols["route_order"]))
    results.append(check_reversibility(tols["reversibility"]))
    results += check_saddle(tols["saddle"])
    results.append(check_antisymmetry(tols["antisymmetry"]))
    return results

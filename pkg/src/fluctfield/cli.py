"""Experiment driver: JSON config in, CSV/JSON results and a run manifest out.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence
(including a time step outside the stability region or probability
leaking off the grid), 4 tolerance violation in ``validate``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .automaton import SEED_BLOCK, Ensemble, InitialSpec, energy, run_automaton, sample_initial
from .effective_action import (coefficient_report, one_loop_phi4_coefficient, one_loop_subtracted,
                               one_loop_sum, saddle_consistency)
from .errors import (BoundaryLeakError, ConfigError, DivergenceError, FeasibilityError,
                     FieldTheoryError, GridError, StabilityError)
from .observables import (chi_hat, commutator_apply, expect_classical, expect_quantum, monomial,
                          p_hat, phi_hat, pi_hat, sigma_hat, zeta_hat, zeta_roughness)
from .phase_space import Axis, ModelParams, PhaseGrid, dump_csv, make_gaussian_q
from .schroedinger import HamiltonianSpec, evolve_psi
from .spectral import fourier_pi_to_zeta, selection_rule_violation
from .transport import edge_mass, evolve_q
from .validation import DEFAULT_TOLERANCES, run_suite

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_TOLERANCE = 0, 2, 3, 4

ENGINES = ("grid_liouville", "schroedinger", "ensemble", "effective_action")
GRID_OBSERVABLES = ("sigma", "pi", "sigma2", "pi2", "phi", "chi", "zeta", "zeta2", "phi2",
                    "var_sigma", "var_phi")
ENSEMBLE_OBSERVABLES = ("sigma", "pi", "sigma2", "pi2", "energy")
SUBCOMMAND_ENGINE = {
    "evolve-liouville": "grid_liouville",
    "evolve-schroedinger": "schroedinger",
    "run-ensemble": "ensemble",
    "check-operators": "grid_liouville",
    "saddle-point": "effective_action",
    "one-loop": "effective_action",
}


# ---------------------------------------------------------------------------
# config

@dataclass
class ExperimentConfig:
    engine: str
    model: ModelParams
    grid: dict | None = None
    initial: dict = field(default_factory=dict)
    ensemble: dict | None = None
    observables: list = field(default_factory=list)
    n_steps: int = 0
    sample_every: int = 1
    seed: int = 0
    output: str = "results"
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    effective_action: dict = field(default_factory=dict)


class _Checker:
    """Collects every validation problem together with its field path."""

    def __init__(self):
        self.errors = []

    def fail(self, path, msg):
        self.errors.append((path, msg))

    def number(self, block, key, path, default=None, required=False, positive=False,
               nonneg=False, integer=False):
        full = f"{path}.{key}" if path else key
        if not isinstance(block, dict) or key not in block:
            if required:
                self.fail(full, "required field missing")
            return default
        v = block[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(full, f"expected a number, got {type(v).__name__}")
            return default
        if integer and int(v) != v:
            self.fail(full, "expected an integer")
            return default
        if not np.isfinite(v):
            self.fail(full, "must be finite")
        elif positive and not v > 0:
            self.fail(full, "must be > 0")
        elif nonneg and v < 0:
            self.fail(full, "must be >= 0")
        return int(v) if integer else v

    def block(self, doc, key, required=False):
        if key not in doc:
            if required:
                self.fail(key, "required block missing")
            return None
        if not isinstance(doc[key], dict):
            self.fail(key, "expected an object")
            return None
        return doc[key]

    def site_values(self, block, key, path, default, positive=False):
        if not isinstance(block, dict) or key not in block:
            return default
        v = block[key]
        if isinstance(v, list):
            if not v:
                self.fail(path, "empty list")
            return [self.number({f"{path}[{i}]": x}, f"{path}[{i}]", "", default, positive=positive)
                    for i, x in enumerate(v)]
        return self.number(block, key, path.rsplit(".", 1)[0], default, positive=positive)


def _axis(chk, block, name):
    path = f"grid.{name}"
    sub = block.get(name) if isinstance(block, dict) else None
    if not isinstance(sub, dict):
        chk.fail(path, "required block missing")
        return None
    center = chk.number(sub, "center", path, 0.0)
    spacing = chk.number(sub, "spacing", path, required=True, positive=True)
    count = chk.number(sub, "count", path, required=True, integer=True)
    if count is not None and (count < 2 or count % 2):
        chk.fail(f"{path}.count", "must be even and >= 2")
        return None
    return {"center": center, "spacing": spacing, "count": count}


def parse_config(text) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.

    Raises :class:`ConfigError` carrying every problem found, each tagged
    with its field path (for example ``"model.mass_squared"``).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("<document>", f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}")])
    if not isinstance(doc, dict):
        raise ConfigError([("<document>", "top level must be an object")])

    chk = _Checker()
    known = {"engine", "model", "grid", "initial", "ensemble", "observables", "n_steps", "sample_every",
             "seed", "output", "tolerances", "options", "effective_action"}
    for key in sorted(set(doc) - known):
        chk.fail(key, "unknown field")

    engine = doc.get("engine")
    if engine not in ENGINES:
        chk.fail("engine", f"must be one of {', '.join(ENGINES)}")

    model_doc = chk.block(doc, "model", required=True)
    model = None
    if model_doc is not None:
        n_before = len(chk.errors)
        m2 = chk.number(model_doc, "mass_squared", "model", required=True)
        lam = chk.number(model_doc, "coupling", "model", 0.0, nonneg=True)
        dim = chk.number(model_doc, "spatial_dim", "model", 0, nonneg=True, integer=True)
        eps = chk.number(model_doc, "lattice_spacing", "model", required=True, positive=True)
        pref = chk.number(model_doc, "laplacian_prefactor", "model", 0.5, nonneg=True)
        for key in sorted(set(model_doc) - {"mass_squared", "coupling", "spatial_dim", "lattice_spacing",
                                            "laplacian_prefactor"}):
            chk.fail(f"model.{key}", "unknown field")
        if len(chk.errors) == n_before:
            model = ModelParams(m2, lam, dim, eps, pref)

    grid = None
    grid_doc = chk.block(doc, "grid", required=engine in ("grid_liouville", "schroedinger"))
    if grid_doc is not None:
        sites = chk.number(grid_doc, "sites", "grid", 1, integer=True)
        if sites is not None and sites < 1:
            chk.fail("grid.sites", "must be >= 1")
        grid = {"sites": sites, "sigma": _axis(chk, grid_doc, "sigma"), "pi": _axis(chk, grid_doc, "pi")}

    init_doc = chk.block(doc, "initial") or {}
    initial = {
        "mean_sigma": chk.site_values(init_doc, "mean_sigma", "initial.mean_sigma", 0.0),
        "mean_pi": chk.site_values(init_doc, "mean_pi", "initial.mean_pi", 0.0),
        "width_sigma": chk.site_values(init_doc, "width_sigma", "initial.width_sigma", 1.0, positive=True),
        "width_pi": chk.site_values(init_doc, "width_pi", "initial.width_pi", 1.0, positive=True),
    }
    if "min_support" in init_doc:
        initial["min_support"] = chk.number(init_doc, "min_support", "initial", 6.0, positive=True)

    ensemble = None
    ens_doc = chk.block(doc, "ensemble", required=engine == "ensemble")
    if ens_doc is not None:
        members = chk.number(ens_doc, "members", "ensemble", required=True, integer=True)
        if members is not None and members < 2:
            chk.fail("ensemble.members", "must be >= 2")
        shape = ens_doc.get("lattice_shape", [])
        if not (isinstance(shape, list) and all(isinstance(n, int) and not isinstance(n, bool) and n > 0
                                                for n in shape)):
            chk.fail("ensemble.lattice_shape", "expected a list of positive integers")
            shape = []
        elif model is not None and len(shape) != model.spatial_dim:
            chk.fail("ensemble.lattice_shape", f"needs {model.spatial_dim} entries (model.spatial_dim)")
        ensemble = {"members": members, "lattice_shape": list(shape)}

    observables = []
    obs_doc = doc.get("observables", [])
    allowed = ENSEMBLE_OBSERVABLES if engine == "ensemble" else GRID_OBSERVABLES
    if not isinstance(obs_doc, list):
        chk.fail("observables", "expected a list")
        obs_doc = []
    for i, item in enumerate(obs_doc):
        path = f"observables[{i}]"
        if isinstance(item, str):
            item = {"name": item}
        if not isinstance(item, dict) or item.get("name") not in allowed:
            chk.fail(f"{path}.name", f"must be one of {', '.join(allowed)}")
            continue
        sites = item.get("sites", [0])
        if not (isinstance(sites, list) and all(isinstance(s, int) and not isinstance(s, bool) and s >= 0
                                                for s in sites)):
            chk.fail(f"{path}.sites", "expected a list of non-negative integers")
            continue
        observables.append({"name": item["name"], "sites": list(sites)})

    n_steps = chk.number(doc, "n_steps", "", 0, nonneg=True, integer=True)
    sample_every = chk.number(doc, "sample_every", "", 1, positive=True, integer=True)
    seed = chk.number(doc, "seed", "", 0, nonneg=True, integer=True)
    output = doc.get("output", "results")
    if not isinstance(output, str):
        chk.fail("output", "expected a string")

    tolerances = {}
    tol_doc = chk.block(doc, "tolerances") or {}
    for key in sorted(tol_doc):
        if key not in DEFAULT_TOLERANCES:
            chk.fail(f"tolerances.{key}", "unknown tolerance")
        else:
            tolerances[key] = chk.number(tol_doc, key, "tolerances", nonneg=True)

    options = chk.block(doc, "options") or {}
    if options.get("interpolation", "spectral") not in ("spectral", "cubic"):
        chk.fail("options.interpolation", "must be 'spectral' or 'cubic'")
    if options.get("splitting", "strang") not in ("strang", "lie"):
        chk.fail("options.splitting", "must be 'strang' or 'lie'")
    if options.get("outer", "kinetic") not in ("kinetic", "potential"):
        chk.fail("options.outer", "must be 'kinetic' or 'potential'")
    if "leak_tol" in options:
        chk.number(options, "leak_tol", "options", positive=True)

    ea = chk.block(doc, "effective_action") or {}
    if "truncation_order" in ea:
        order = chk.number(ea, "truncation_order", "effective_action", integer=True)
        if order is not None and order < 6:
            chk.fail("effective_action.truncation_order", "must be >= 6")
    if "phi_values" in ea and not (isinstance(ea["phi_values"], list)
                                   and all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                           for x in ea["phi_values"])):
        chk.fail("effective_action.phi_values", "expected a list of numbers")
    if "lattice_dims" in ea:
        dims = ea["lattice_dims"]
        if not (isinstance(dims, list) and all(isinstance(n, int) and not isinstance(n, bool) and n > 0
                                               for n in dims)):
            chk.fail("effective_action.lattice_dims", "expected a list of positive integers")
        elif model is not None and len(dims) != model.spatial_dim + 1:
            chk.fail("effective_action.lattice_dims", f"needs {model.spatial_dim + 1} entries (time + space)")
    if ea.get("per", "site") not in ("site", "volume"):
        chk.fail("effective_action.per", "must be 'site' or 'volume'")
    if ea.get("dispersion", "sin2") not in ("sin2", "naive"):
        chk.fail("effective_action.dispersion", "must be 'sin2' or 'naive'")

    if chk.errors:
        raise ConfigError(chk.errors)
    return ExperimentConfig(engine, model, grid, initial, ensemble, observables, n_steps, sample_every,
                            seed, output, tolerances, dict(options), dict(ea))


def serialize_config(cfg: ExperimentConfig) -> str:
    doc = {
        "engine": cfg.engine,
        "model": {
            "mass_squared": cfg.model.mass_squared,
            "coupling": cfg.model.coupling,
            "spatial_dim": cfg.model.spatial_dim,
            "lattice_spacing": cfg.model.lattice_spacing,
            "laplacian_prefactor": cfg.model.laplacian_prefactor,
        },
        "initial": cfg.initial,
        "observables": cfg.observables,
        "n_steps": cfg.n_steps,
        "sample_every": cfg.sample_every,
        "seed": cfg.seed,
        "output": cfg.output,
        "tolerances": cfg.tolerances,
        "options": cfg.options,
        "effective_action": cfg.effective_action,
    }
    if cfg.grid is not None:
        doc["grid"] = cfg.grid
    if cfg.ensemble is not None:
        doc["ensemble"] = cfg.ensemble
    return json.dumps(doc, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# output helpers

def _fmt(x):
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sample_steps(cfg):
    steps = list(range(0, cfg.n_steps + 1, cfg.sample_every))
    if steps[-1] != cfg.n_steps:
        steps.append(cfg.n_steps)
    return steps


# ---------------------------------------------------------------------------
# grid engines

def _build_grid(cfg) -> PhaseGrid:
    g = cfg.grid
    if g is None:
        raise ConfigError([("grid", "required block missing")])
    return PhaseGrid(Axis(**g["sigma"]), Axis(**g["pi"]), g["sites"])


def _initial_q(cfg, grid):
    init = dict(cfg.initial)
    return make_gaussian_q(grid, init["mean_sigma"], init["mean_pi"], init["width_sigma"], init["width_pi"],
                           min_support=init.get("min_support", 6.0))


def _grid_observable(name, site, q=None, psi=None):
    """Value of a named observable; classical-field ones use ``q`` when given."""
    classical = {
        "sigma": lambda s, p: s[site],
        "pi": lambda s, p: p[site],
        "sigma2": lambda s, p: s[site] ** 2,
        "pi2": lambda s, p: p[site] ** 2,
    }
    operators = {
        "sigma": sigma_hat(site),
        "pi": pi_hat(site),
        "sigma2": monomial(2, 0, site),
        "pi2": monomial(0, 2, site),
        "phi": phi_hat(site),
        "chi": chi_hat(site),
        "zeta": zeta_hat(site),
        "zeta2": [zeta_hat(site)] * 2,
        "phi2": [phi_hat(site)] * 2,
    }
    if q is not None and name in classical:
        return expect_classical(q, classical[name])
    if q is not None and name == "zeta2":
        return zeta_roughness(q, site)
    if name == "var_sigma":
        return _grid_observable("sigma2", site, q, psi) - _grid_observable("sigma", site, q, psi) ** 2
    if name == "var_phi":
        return _grid_observable("phi2", site, q, psi) - _grid_observable("phi", site, q, psi) ** 2
    if psi is None:
        psi = fourier_pi_to_zeta(q)
    return expect_quantum(psi, operators[name])


def _check_sites(cfg, n_sites):
    for i, ob in enumerate(cfg.observables):
        for s in ob["sites"]:
            if s >= n_sites:
                raise ConfigError([(f"observables[{i}].sites", f"site {s} out of range (have {n_sites})")])


def run_liouville(cfg, out: Path):
    grid = _build_grid(cfg)
    _check_sites(cfg, grid.sites)
    q = _initial_q(cfg, grid)
    opts = cfg.options
    rows = []

    def record(state, defect):
        psi = fourier_pi_to_zeta(state) if any(o["name"] not in ("sigma", "pi", "sigma2", "pi2")
                                              for o in cfg.observables) else None
        t = _fmt(state.time)
        for ob in cfg.observables:
            for s in ob["sites"]:
                rows.append([t, ob["name"], s, _fmt(_grid_observable(ob["name"], s, state, psi))])
        rows.append([t, "norm_defect", "", _fmt(defect)])
        rows.append([t, "edge_mass", "", _fmt(edge_mass(state))])

    steps = _sample_steps(cfg)
    record(q, 0.0)
    done = 0
    for target in steps[1:]:
        q, defects = evolve_q(q, cfg.model, target - done, interpolation=opts.get("interpolation", "spectral"),
                              leak_tol=opts.get("leak_tol", 1e-6))
        done = target
        record(q, float(np.abs(defects).max()) if defects.size else 0.0)
    _write_csv(out / "liouville.csv", ["time", "observable_name", "site", "value"], rows)
    files = ["liouville.csv"]
    if opts.get("dump_wavefunction"):
        dump_csv(q, out / "q_final.csv")
        files.append("q_final.csv")
    return files


def run_schroedinger(cfg, out: Path):
    grid = _build_grid(cfg)
    _check_sites(cfg, grid.sites)
    psi = fourier_pi_to_zeta(_initial_q(cfg, grid))
    opts = cfg.options
    spec = HamiltonianSpec(cfg.model, opts.get("splitting", "strang"), opts.get("outer", "kinetic"))
    rows = []

    def record(state):
        t = _fmt(state.time)
        for ob in cfg.observables:
            for s in ob["sites"]:
                rows.append([t, ob["name"], s, _fmt(_grid_observable(ob["name"], s, psi=state))])
        rows.append([t, "norm_defect", "", _fmt(state.norm_sq() - 1.0)])
        rows.append([t, "selection_rule", "", _fmt(selection_rule_violation(state))])

    steps = _sample_steps(cfg)
    record(psi)
    done = 0
    for target in steps[1:]:
        psi = evolve_psi(psi, spec, 2 * cfg.model.eps, target - done)
        done = target
        record(psi)
    _write_csv(out / "schroedinger.csv", ["time", "observable_name", "site", "value"], rows)
    files = ["schroedinger.csv"]
    if opts.get("dump_wavefunction"):
        dump_csv(psi, out / "psi_final.csv")
        files.append("psi_final.csv")
    return files


def run_check_operators(cfg, out: Path):
    """Quantum versus classical rule, identities and commutators on the initial state."""
    grid = _build_grid(cfg)
    q = _initial_q(cfg, grid)
    psi = fourier_pi_to_zeta(q)
    report = {"rule_equivalence": {}, "commutators": {}, "identities": {}}
    worst = 0.0
    for site in range(grid.sites):
        for a in range(5):
            for b in range(5 - a):
                c = expect_classical(q, lambda s, p: s[site] ** a * p[site] ** b)
                qv = expect_quantum(psi, monomial(a, b, site))
                worst = max(worst, abs(c - qv) / max(1.0, abs(c)))
        v = psi.values
        report["commutators"][f"site{site}"] = {
            "sigma_pi": float(np.abs(commutator_apply(sigma_hat(site), pi_hat(site), psi).values).max()),
            "phi_pi_minus_half_i": float(np.abs(commutator_apply(phi_hat(site), pi_hat(site), psi).values
                                                + 0.5j * v).max()),
            "phi_pi_plus_half_i": float(np.abs(commutator_apply(phi_hat(site), pi_hat(site), psi).values
                                               - 0.5j * v).max()),
            "phi_p_minus_i": float(np.abs(commutator_apply(phi_hat(site), p_hat(site), psi).values
                                          - 1j * v).max()),
        }
        z2 = zeta_roughness(q, site)
        var_phi = _grid_observable("var_phi", site, psi=psi)
        var_sigma = _grid_observable("var_sigma", site, q)
        report["identities"][f"site{site}"] = {
            "zeta_mean": _grid_observable("zeta", site, psi=psi),
            "zeta_sq": z2,
            "dispersion_defect": var_phi - var_sigma - 0.25 * z2,
            "phi_minus_sigma": _grid_observable("phi", site, psi=psi) - _grid_observable("sigma", site, q),
            "chi_minus_sigma": _grid_observable("chi", site, psi=psi) - _grid_observable("sigma", site, q),
        }
    report["rule_equivalence"]["max_relative_deviation"] = worst
    _write_json(out / "operators.json", report)
    return ["operators.json"]


# ---------------------------------------------------------------------------
# ensemble engine

def _ensemble_values(name, ens: Ensemble, params, site):
    lat = ens.lattice_shape
    if name == "energy":
        return energy(ens.as_configuration(), params)
    idx = (slice(None),) + np.unravel_index(site, lat) if lat else (slice(None),)
    s, p = ens.sigma[idx], ens.pi[idx]
    return {"sigma": s, "pi": p, "sigma2": s**2, "pi2": p**2}[name]


def run_ensemble(cfg, out: Path, threads=1):
    spec = InitialSpec(tuple(cfg.ensemble["lattice_shape"]), cfg.initial["mean_sigma"], cfg.initial["mean_pi"],
                       cfg.initial["width_sigma"], cfg.initial["width_pi"])
    n_sites = int(np.prod(spec.lattice_shape)) if spec.lattice_shape else 1
    _check_sites(cfg, n_sites)
    ens = sample_initial(spec, cfg.ensemble["members"], cfg.seed)
    # Chunks follow the seed blocks, so the split does not depend on the thread count.
    bounds = [(a, min(a + SEED_BLOCK, len(ens))) for a in range(0, len(ens), SEED_BLOCK)]
    chunks = [Ensemble(ens.sigma[a:b], ens.pi[a:b], ens.seed, ens.time, spec) for a, b in bounds]
    rows = []

    def record(chunks):
        whole = Ensemble(np.concatenate([c.sigma for c in chunks]), np.concatenate([c.pi for c in chunks]),
                         ens.seed, chunks[0].time, spec)
        t = _fmt(whole.time)
        for ob in cfg.observables:
            sites = ["all"] if ob["name"] == "energy" else ob["sites"]
            for s in sites:
                vals = _ensemble_values(ob["name"], whole, cfg.model, s)
                n = vals.size
                mean = vals.mean()
                se = vals.std(ddof=1) / np.sqrt(n)
                rows.append([t, s, ob["name"], _fmt(mean), _fmt(se), n])

    record(chunks)
    done = 0
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        for target in _sample_steps(cfg)[1:]:
            k = target - done
            chunks = list(pool.map(lambda c: run_automaton(c, cfg.model, k), chunks))
            done = target
            record(chunks)
    _write_csv(out / "ensemble.csv", ["time", "site", "observable", "mean", "std_error", "n"], rows)
    return ["ensemble.csv"]


# ---------------------------------------------------------------------------
# effective action

def run_saddle_point(cfg, out: Path):
    ea = cfg.effective_action
    order = ea.get("truncation_order", 26)
    report = coefficient_report(cfg.model, order)
    checks = []
    for phi in ea.get("phi_values", [0.0, 0.1, 0.2, 0.3]):
        c = saddle_consistency(cfg.model, phi, order)
        checks.append({"phi": c.phi, "series_value": c.series_value, "numeric_value": c.numeric_value,
                       "relative_deviation": c.relative_deviation, "in_validity_region": c.in_validity_region})
    result = {
        "coefficients": report["coefficients"],
        "coefficients_exact": report["coefficients_exact"],
        "paper_reference_values": report["reference_values"],
        "paper_reference_values_exact": report["reference_values_exact"],
        "deviations": report["deviations"],
        "truncation_order": order,
        "saddle_consistency": checks,
    }
    _write_json(out / "saddle_point.json", result)
    return ["saddle_point.json"]


def run_one_loop(cfg, out: Path):
    ea = cfg.effective_action
    dims = ea.get("lattice_dims", [8] * (cfg.model.spatial_dim + 1))
    per = ea.get("per", "site")
    disp = ea.get("dispersion", "sin2")
    values = {}
    for phi in ea.get("phi_values", [0.0, 0.1, 0.2, 0.3]):
        values[repr(float(phi))] = {
            "delta_s1": one_loop_sum(cfg.model, phi, dims, per, disp),
            "subtracted": one_loop_subtracted(cfg.model, phi, dims, per, disp),
        }
    c4 = one_loop_phi4_coefficient(cfg.model, dims, per, disp)
    lam, m2, eps = cfg.model.coupling, cfg.model.mass_squared, cfg.model.eps
    scale = lam**2 / (m2 * eps**2)
    result = {
        "coefficients": {"4": c4},
        "paper_reference_values": {"4": {"scaling": "lambda^2 / (m^2 eps^2)", "value": scale}},
        "deviations": {"4": {"ratio_to_scaling": c4 / scale if scale else None}},
        "lattice_dims": dims,
        "normalisation": per,
        "dispersion": disp,
        "values": values,
    }
    _write_json(out / "one_loop.json", result)
    return ["one_loop.json"]


# ---------------------------------------------------------------------------
# driver

def _manifest(cfg, command, seed, threads, files, out: Path, wall):
    digests = {f: hashlib.sha256((out / f).read_bytes()).hexdigest() for f in files}
    return {
        "command": command,
        "config": json.loads(serialize_config(cfg)) if cfg is not None else None,
        "seed": seed,
        "threads": threads,
        "versions": {"fluctfield": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_time_s": wall,
        "files": digests,
    }


def run_experiment(cfg: ExperimentConfig, command=None, output=None, threads=1):
    """Run one subcommand on a parsed config; returns ``(exit_code, files)``."""
    command = command or {v: k for k, v in SUBCOMMAND_ENGINE.items() if k != "check-operators"}[cfg.engine]
    out = Path(output or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    runners = {
        "evolve-liouville": run_liouville,
        "evolve-schroedinger": run_schroedinger,
        "check-operators": run_check_operators,
        "saddle-point": run_saddle_point,
        "one-loop": run_one_loop,
    }
    if command == "run-ensemble":
        files = run_ensemble(cfg, out, threads)
    else:
        files = runners[command](cfg, out)
    wall = time.perf_counter() - start
    _write_json(out / "manifest.json", _manifest(cfg, command, cfg.seed, threads, files, out, wall))
    return EXIT_OK, files


def run_validate(cfg, output, threads):
    out = Path(output or (cfg.output if cfg else "results"))
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    results = run_suite(cfg.tolerances if cfg else None)
    _write_json(out / "validate.json", {"checks": [r.as_dict() for r in results],
                                        "passed": all(r.passed for r in results)})
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3e} (tol {r.tolerance:.1e})")
    wall = time.perf_counter() - start
    _write_json(out / "manifest.json", _manifest(cfg, "validate", cfg.seed if cfg else None, threads,
                                                 ["validate.json"], out, wall))
    return EXIT_OK if all(r.passed for r in results) else EXIT_TOLERANCE


def _report(kind, message, details=None, code=EXIT_CONFIG):
    print(json.dumps({"error": kind, "message": message, "details": details or []}), file=sys.stderr)
    return code


def build_parser():
    parser = argparse.ArgumentParser(prog="fluctfield", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(SUBCOMMAND_ENGINE) + ["validate"]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "validate", help="JSON experiment config")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--output", help="output directory (overrides the config)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for the ensemble engine")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    cfg = None
    try:
        if args.config:
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError([("--config", str(exc))])
            cfg = parse_config(text)
            if args.seed is not None:
                if args.seed < 0:
                    raise ConfigError([("--seed", "must be >= 0")])
                cfg.seed = args.seed
            want = SUBCOMMAND_ENGINE.get(args.command)
            if want and cfg.engine != want and not (args.command == "check-operators"
                                                    and cfg.engine == "schroedinger"):
                raise ConfigError([("engine", f"'{args.command}' needs engine '{want}', config has '{cfg.engine}'")])
        if args.command == "validate":
            return run_validate(cfg, args.output, args.threads)
        return run_experiment(cfg, args.command, args.output, args.threads)[0]
    except ConfigError as exc:
        return _report("config", "invalid configuration", [{"path": p, "message": m} for p, m in exc.errors])
    except (FeasibilityError, GridError) as exc:
        return _report(type(exc).__name__, str(exc))
    except (DivergenceError, StabilityError, BoundaryLeakError) as exc:
        details = [{"step": exc.step, "member": exc.member}] if isinstance(exc, DivergenceError) else []
        return _report(type(exc).__name__, str(exc), details, EXIT_DIVERGENCE)
    except FieldTheoryError as exc:
        return _report(type(exc).__name__, str(exc), code=EXIT_DIVERGENCE)
    except ValueError as exc:
        return _report(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())

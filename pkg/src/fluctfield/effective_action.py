"""Minkowski action of the fluctuating/mirror field pair and the mirror-field
integration at tree level and one loop.

Series are kept in exact rational arithmetic (:class:`fractions.Fraction`);
model parameters given as floats enter through their exact binary values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, GridError
from .phase_space import ModelParams
from .transport import force


# ---------------------------------------------------------------------------
# action

@dataclass(frozen=True)
class ActionValue:
    kinetic: float
    potential: float
    interaction: float

    @property
    def total(self) -> float:
        return (self.kinetic + self.potential) + self.interaction


def _kinetic(field, params):
    dt = np.diff(field, axis=0) / params.eps
    return 0.5 * np.sum(dt**2)


def _static(field, params):
    """Gradient energy plus ``V(phi) = m^2 phi^2/2 + lambda phi^4/16``, summed over the lattice."""
    dens = 0.5 * params.mass_squared * field**2 + params.coupling / 16.0 * field**4
    d = params.spatial_dim
    if d:
        grad = sum((np.roll(field, -1, axis=ax) - field) ** 2 for ax in range(1, d + 1))
        dens = dens + 0.5 * params.laplacian_prefactor / params.eps**2 * grad
    return np.sum(dens)


def minkowski_action(phi, chi, params: ModelParams) -> ActionValue:
    """Discrete ``S_M = S(phi) - S(chi) - S_int(phi, chi)``.

    ``phi`` and ``chi`` have shape ``(T, *spatial)`` with periodic space.
    Time derivatives are forward differences over the ``T - 1`` links;
    static terms are summed over all ``T`` slices.  Each lattice point
    carries the volume ``eps**(D+1)``.  The gradient term uses the same
    Laplacian prefactor as the automaton force, so the result equals
    ``sum (d_t sigma d_t zeta + zeta F(sigma))`` with ``sigma = (phi+chi)/2``,
    ``zeta = phi - chi``.
    """
    phi = np.asarray(phi, dtype=float)
    chi = np.asarray(chi, dtype=float)
    if phi.shape != chi.shape:
        raise GridError(f"phi shape {phi.shape} != chi shape {chi.shape}")
    if phi.ndim != params.spatial_dim + 1:
        raise GridError(f"trajectories need {params.spatial_dim + 1} axes (time + space)")
    vol = params.eps ** (params.spatial_dim + 1)
    kinetic = (_kinetic(phi, params) - _kinetic(chi, params)) * vol
    potential = (_static(chi, params) - _static(phi, params)) * vol
    s_int = params.coupling / 8.0 * np.sum(phi**3 * chi - phi * chi**3) * vol
    return ActionValue(float(kinetic), float(potential), float(-s_int))


def action_sigma_zeta(sigma, zeta, params: ModelParams) -> float:
    """``sum (d_t sigma d_t zeta + zeta F(sigma))`` on the same lattice."""
    vol = params.eps ** (params.spatial_dim + 1)
    kin = np.sum(np.diff(sigma, axis=0) * np.diff(zeta, axis=0)) / params.eps**2
    return float((kin + np.sum(zeta * force(sigma, params))) * vol)


# ---------------------------------------------------------------------------
# formal power series in phi

def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class PowerSeries:
    """Truncated power series ``sum_n c_n phi^n`` with rational coefficients."""

    coefficients: dict
    truncation_order: int

    def __post_init__(self):
        clean = {int(k): _frac(v) for k, v in self.coefficients.items()
                 if v != 0 and k <= self.truncation_order}
        object.__setattr__(self, "coefficients", dict(sorted(clean.items())))

    @classmethod
    def monomial(cls, power, coeff=1, order=None):
        return cls({power: coeff}, power if order is None else order)

    def __getitem__(self, power) -> Fraction:
        return self.coefficients.get(power, Fraction(0))

    def __add__(self, other):
        order = min(self.truncation_order, other.truncation_order)
        out = dict(self.coefficients)
        for k, v in other.coefficients.items():
            out[k] = out.get(k, 0) + v
        return PowerSeries(out, order)

    def __neg__(self):
        return PowerSeries({k: -v for k, v in self.coefficients.items()}, self.truncation_order)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor):
        f = _frac(factor)
        return PowerSeries({k: f * v for k, v in self.coefficients.items()}, self.truncation_order)

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            return self.scale(other)
        order = min(self.truncation_order + min(other.coefficients, default=0),
                    other.truncation_order + min(self.coefficients, default=0))
        out = {}
        for i, a in self.coefficients.items():
            for j, b in other.coefficients.items():
                if i + j <= order:
                    out[i + j] = out.get(i + j, 0) + a * b
        return PowerSeries(out, order)

    __rmul__ = scale

    def __pow__(self, n):
        out = PowerSeries({0: 1}, self.truncation_order)
        for _ in range(n):
            out = out * self
        return out

    def truncate(self, order):
        return PowerSeries(self.coefficients, min(order, self.truncation_order))

    def evaluate(self, x) -> float:
        x = float(x)
        return math.fsum(float(c) * x**k for k, c in self.coefficients.items())

    def parity(self):
        """``"odd"``, ``"even"``, ``"zero"`` or ``None`` for mixed parity."""
        if not self.coefficients:
            return "zero"
        kinds = {k % 2 for k in self.coefficients}
        if kinds == {1}:
            return "odd"
        if kinds == {0}:
            return "even"
        return None

    def as_floats(self):
        return {k: float(v) for k, v in self.coefficients.items()}


def _check_mass(params):
    if not params.mass_squared > 0:
        raise ValueError(f"mirror-field expansion needs m^2 > 0, got {params.mass_squared}")


def solve_mirror_series(params: ModelParams, truncation_order: int) -> PowerSeries:
    """Constant-field saddle ``chi(phi)`` up to ``phi**truncation_order``.

    Fixed-point iteration of
    ``m^2 chi = (lambda/8) (phi^3 - 3 chi^2 phi - 2 chi^3)`` in exact
    rational arithmetic, starting from ``chi = 0``.
    """
    _check_mass(params)
    m2 = _frac(params.mass_squared)
    lam = _frac(params.coupling)
    n = truncation_order
    phi = PowerSeries.monomial(1, order=n)
    phi3 = PowerSeries.monomial(3, order=n)
    chi = PowerSeries({}, n)
    for _ in range(n + 1):
        rhs = phi3 - 3 * (chi * chi * phi) - 2 * (chi * chi * chi)
        new = rhs.scale(lam / (8 * m2)).truncate(n)
        if new.coefficients == chi.coefficients:
            return new
        chi = new
    raise ConvergenceError(f"mirror series did not settle within {n + 1} passes")


def mirror_residual(chi_bar: PowerSeries, params: ModelParams) -> PowerSeries:
    """``m^2 chi - (lambda/8)(phi^3 - 3 chi^2 phi - 2 chi^3)`` without truncation.

    Vanishes up to ``chi_bar.truncation_order`` for a correct solution.
    """
    m2 = _frac(params.mass_squared)
    lam = _frac(params.coupling)
    big = 3 * chi_bar.truncation_order + 3
    chi = PowerSeries(chi_bar.coefficients, big)
    phi = PowerSeries.monomial(1, order=big)
    phi3 = PowerSeries.monomial(3, order=big)
    return chi.scale(m2) - (phi3 - 3 * (chi * chi * phi) - 2 * (chi * chi * chi)).scale(lam / 8)


def tree_level_delta_s(chi_bar: PowerSeries, params: ModelParams, truncation_order: int) -> PowerSeries:
    """``-(lambda/16)(chi^4 + chi^3 phi + chi phi^3)`` up to ``phi**truncation_order``."""
    if chi_bar.truncation_order < truncation_order - 3:
        raise ValueError(
            f"chi_bar known to phi^{chi_bar.truncation_order}; need phi^{truncation_order - 3} "
            f"for Delta S to phi^{truncation_order}"
        )
    lam = _frac(params.coupling)
    n = truncation_order
    chi = PowerSeries(chi_bar.coefficients, n)
    phi = PowerSeries.monomial(1, order=n)
    phi3 = PowerSeries.monomial(3, order=n)
    body = chi**4 + chi**3 * phi + chi * phi3
    return body.scale(-lam / 16).truncate(n)


def reference_coefficients(params: ModelParams):
    """Reference values for the low-order coefficients of the constant-field expansion."""
    m2 = _frac(params.mass_squared)
    lam = _frac(params.coupling)
    return {
        "chi_bar": {3: lam / (8 * m2), 7: -9 * lam**3 / (512 * m2**3)},
        "delta_s0": {6: -(lam**2) / (128 * m2), 10: lam**4 / (1024 * m2**3)},
    }


def coefficient_report(params: ModelParams, truncation_order=26):
    """Series coefficients next to the reference values, with deviations."""
    chi = solve_mirror_series(params, truncation_order - 3)
    ds = tree_level_delta_s(chi, params, truncation_order)
    computed = {"chi_bar": chi, "delta_s0": ds}
    refs = reference_coefficients(params)
    deviations = {
        name: {p: float(computed[name][p] - ref) for p, ref in table.items()}
        for name, table in refs.items()
    }
    return {
        "coefficients": {name: s.as_floats() for name, s in computed.items()},
        "coefficients_exact": {name: {p: str(c) for p, c in s.coefficients.items()}
                               for name, s in computed.items()},
        "reference_values": {name: {p: float(v) for p, v in t.items()} for name, t in refs.items()},
        "reference_values_exact": {name: {p: str(v) for p, v in t.items()} for name, t in refs.items()},
        "deviations": deviations,
    }


# ---------------------------------------------------------------------------
# numerical stationarization

def reduced_action_density(chi, phi, params: ModelParams) -> float:
    """Constant-field ``Sbar(chi, phi)`` per unit volume."""
    m2, lam = params.mass_squared, params.coupling
    return -0.5 * m2 * chi**2 - lam / 16.0 * chi**4 + lam / 8.0 * (phi**3 * chi - phi * chi**3)


def stationary_chi(params: ModelParams, phi) -> float:
    """Root of the constant-field mirror equation continuously connected to chi = 0."""
    _check_mass(params)
    m2, lam = params.mass_squared, params.coupling
    if phi == 0 or lam == 0:
        return 0.0

    def g(chi):
        return m2 * chi - lam / 8.0 * (phi**3 - 3 * chi**2 * phi - 2 * chi**3)

    lead = lam * phi**3 / (8 * m2)
    lo, hi = sorted((0.0, 2.0 * lead))
    try:
        return brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    except ValueError as exc:
        raise ConvergenceError(f"no bracketed stationary point for phi={phi}") from exc


@dataclass(frozen=True)
class SaddleCheck:
    phi: float
    series_value: float
    numeric_value: float
    chi_numeric: float
    chi_series: float
    in_validity_region: bool

    @property
    def relative_deviation(self) -> float:
        if self.numeric_value == 0:
            return abs(self.series_value)
        return abs(self.series_value - self.numeric_value) / abs(self.numeric_value)


def saddle_consistency(params: ModelParams, phi_value, truncation_order=26) -> SaddleCheck:
    """Tree-level correction from the series versus direct stationarization.

    The series is trusted for ``lambda phi^2 / m^2 <= 0.1``; outside that
    region both values are still reported.
    """
    chi_series = solve_mirror_series(params, truncation_order - 3)
    ds = tree_level_delta_s(chi_series, params, truncation_order)
    chi_star = stationary_chi(params, phi_value)
    numeric = 0.0 - reduced_action_density(chi_star, phi_value, params)
    valid = params.coupling * phi_value**2 / params.mass_squared <= 0.1
    return SaddleCheck(float(phi_value), ds.evaluate(phi_value), float(numeric),
                       float(chi_star), chi_series.evaluate(phi_value), valid)


# ---------------------------------------------------------------------------
# one loop

def lattice_momentum_sq(lattice_dims, eps, dispersion="sin2") -> np.ndarray:
    """Squared lattice momenta on a periodic lattice, one entry per mode.

    ``"sin2"``: ``sum_mu (2/eps)^2 sin^2(q_mu eps / 2)``;
    ``"naive"``: ``sum_mu q_mu^2`` in the first Brillouin zone.
    """
    total = np.zeros(tuple(lattice_dims))
    for ax, n in enumerate(lattice_dims):
        q = 2.0 * np.pi * np.fft.fftfreq(n, eps)
        if dispersion == "sin2":
            comp = (2.0 / eps * np.sin(q * eps / 2.0)) ** 2
        elif dispersion == "naive":
            comp = q**2
        else:
            raise ValueError(f"unknown dispersion {dispersion!r}")
        shape = [1] * len(lattice_dims)
        shape[ax] = n
        total = total + comp.reshape(shape)
    return total


def effective_mass_sq(params: ModelParams, phi) -> float:
    m2 = params.mass_squared
    return m2 + 3.0 * params.coupling**2 * phi**4 / (32.0 * m2)


def _check_dims(params, lattice_dims):
    if len(lattice_dims) != params.spatial_dim + 1:
        raise GridError(f"need {params.spatial_dim + 1} lattice extents (time + space), got {len(lattice_dims)}")


def _norm(lattice_dims, params, per):
    n = int(np.prod(lattice_dims))
    if per == "site":
        return 1.0 / n
    if per == "volume":
        return 1.0 / (n * params.eps ** len(lattice_dims))
    raise ValueError(f"per must be 'site' or 'volume', got {per!r}")


def one_loop_sum(params: ModelParams, phi_value, lattice_dims, per="site", dispersion="sin2") -> float:
    """``(1/2) sum_q ln(qhat^2 + M^2(phi))`` normalised per site or per unit volume."""
    _check_mass(params)
    _check_dims(params, lattice_dims)
    mass = effective_mass_sq(params, phi_value)
    if not mass > 0:
        raise ValueError("effective mass squared must be positive")
    q2 = lattice_momentum_sq(lattice_dims, params.eps, dispersion)
    return float(0.5 * np.sum(np.log(q2 + mass)) * _norm(lattice_dims, params, per))


def one_loop_subtracted(params: ModelParams, phi_value, lattice_dims, per="site", dispersion="sin2") -> float:
    """``Delta S1(phi) - Delta S1(0)`` evaluated without cancellation."""
    _check_mass(params)
    _check_dims(params, lattice_dims)
    shift = effective_mass_sq(params, phi_value) - params.mass_squared
    q2 = lattice_momentum_sq(lattice_dims, params.eps, dispersion)
    return float(0.5 * np.sum(np.log1p(shift / (q2 + params.mass_squared))) * _norm(lattice_dims, params, per))


def one_loop_phi4_coefficient(params: ModelParams, lattice_dims, per="volume", dispersion="sin2") -> float:
    """Small-phi coefficient of ``phi^4`` in the subtracted one-loop term."""
    _check_mass(params)
    _check_dims(params, lattice_dims)
    m2 = params.mass_squared
    q2 = lattice_momentum_sq(lattice_dims, params.eps, dispersion)
    return float(3.0 * params.coupling**2 / (64.0 * m2) * np.sum(1.0 / (q2 + m2)) * _norm(lattice_dims, params, per))

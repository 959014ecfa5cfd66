"""Operators, the two expectation rules, and statistical-observable identities.

Operators act on complex wave functions in the (sigma, zeta) basis:

=========  ===================================================
sigma_hat  multiplication by sigma
zeta_hat   multiplication by zeta
phi_hat    multiplication by sigma + zeta/2
chi_hat    multiplication by sigma - zeta/2
pi_hat     -i d/dzeta, applied exactly as multiplication by pi
           in the pi basis (the discrete dual of zeta)
p_hat      -i d/dphi = -i (d/dsigma / 2 + d/dzeta), with a
           spectral sigma derivative
=========  ===================================================
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BandLimitError, HermiticityError, IdentityViolation, ResolutionError
from .phase_space import ClassicalWaveFunction, ComplexWaveFunction
from .spectral import fourier_pi_to_zeta, pi_to_zeta_array, zeta_to_pi_array
from .transport import spectral_derivative


class Kind(enum.Enum):
    SIGMA = "sigma_hat"
    PI = "pi_hat"
    ZETA = "zeta_hat"
    PHI = "phi_hat"
    CHI = "chi_hat"
    P = "p_hat"


@dataclass(frozen=True)
class OperatorKernel:
    kind: Kind
    site: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))


def sigma_hat(site=0):
    return OperatorKernel(Kind.SIGMA, site)


def pi_hat(site=0):
    return OperatorKernel(Kind.PI, site)


def zeta_hat(site=0):
    return OperatorKernel(Kind.ZETA, site)


def phi_hat(site=0):
    return OperatorKernel(Kind.PHI, site)


def chi_hat(site=0):
    return OperatorKernel(Kind.CHI, site)


def p_hat(site=0):
    return OperatorKernel(Kind.P, site)


def _apply_pi(grid, values, site):
    in_pi = zeta_to_pi_array(grid, values, sites=[site])
    return pi_to_zeta_array(grid, in_pi * grid.pi(site), sites=[site])


def apply_kernel(grid, values, op: OperatorKernel):
    s = op.site
    if op.kind is Kind.SIGMA:
        return grid.sigma(s) * values
    if op.kind is Kind.ZETA:
        return grid.odd_zeta(s) * values
    if op.kind is Kind.PHI:
        return (grid.sigma(s) + 0.5 * grid.odd_zeta(s)) * values
    if op.kind is Kind.CHI:
        return (grid.sigma(s) - 0.5 * grid.odd_zeta(s)) * values
    if op.kind is Kind.PI:
        return _apply_pi(grid, values, s)
    if op.kind is Kind.P:
        d_sigma = spectral_derivative(values, grid.sigma_dim(s), grid.sigma_axis.spacing)
        return -0.5j * d_sigma + _apply_pi(grid, values, s)
    raise ValueError(op)


Operator = OperatorKernel | Sequence[OperatorKernel] | Callable[[ComplexWaveFunction], np.ndarray]


def apply_operator(psi: ComplexWaveFunction, op: Operator) -> ComplexWaveFunction:
    """Apply a kernel, a product of kernels, or a callable to ``psi``.

    A sequence ``[A, B, C]`` denotes the product ``A B C`` (C acts first).
    """
    if isinstance(op, OperatorKernel):
        values = apply_kernel(psi.grid, psi.values, op)
    elif callable(op):
        values = np.asarray(op(psi), dtype=complex)
    else:
        values = psi.values
        for k in reversed(list(op)):
            values = apply_kernel(psi.grid, values, k)
    return psi.copy(values=values)


def monomial(a, b, site=0):
    """Operator ``sigma^a pi^b`` at one site (the two factors commute)."""
    return [sigma_hat(site)] * a + [pi_hat(site)] * b


def _coordinates(grid, axis_fn):
    return np.stack([np.broadcast_to(axis_fn(i), grid.shape) for i in range(grid.sites)])


def expect_classical(q: ClassicalWaveFunction, f) -> float:
    """Classical statistical rule ``sum f(sigma, pi) q^2``.

    ``f`` receives two arrays of shape ``(sites, *grid.shape)`` holding the
    sigma and pi coordinates of every node.
    """
    g = q.grid
    vals = f(_coordinates(g, g.sigma), _coordinates(g, g.pi))
    return float(np.sum(vals * q.values**2) * g.q_weight)


def expect_quantum(psi: ComplexWaveFunction, op: Operator, imag_tol=1e-10) -> float:
    """Quantum rule ``psi^dagger A psi`` for a Hermitian operator ``A``."""
    a_psi = apply_operator(psi, op).values
    val = np.sum(np.conj(psi.values) * a_psi) * psi.grid.psi_weight
    scale = max(1.0, abs(val.real))
    if abs(val.imag) > imag_tol * scale:
        raise HermiticityError(f"expectation value has imaginary part {val.imag:.3g}")
    return float(val.real)


def expect_quantum_complex(psi: ComplexWaveFunction, op: Operator) -> complex:
    a_psi = apply_operator(psi, op).values
    return complex(np.sum(np.conj(psi.values) * a_psi) * psi.grid.psi_weight)


def roughness_derivative_route(q: ClassicalWaveFunction, site=0) -> float:
    """``sum (dq/dpi)^2`` with an FFT derivative along the pi axis."""
    g = q.grid
    dq = spectral_derivative(q.values, g.pi_dim(site), g.pi_axis.spacing)
    return float(np.sum(dq**2) * g.q_weight)


def zeta_band_edge_weight(psi: ComplexWaveFunction, site=0, layers=2) -> float:
    """``sum zeta^2 |psi|^2`` over the outermost zeta nodes (Nyquist included).

    Near the band edge zeta is aliased, so this is the part of ``<zeta^2>``
    the pi grid cannot determine.
    """
    g = psi.grid
    n = g.pi_axis.count
    sel = np.r_[0:layers, n - layers + 1:n]
    z2 = g.zeta_nodes[sel] ** 2
    prob = np.take(np.abs(psi.values) ** 2, sel, axis=g.pi_dim(site))
    shape = [1] * g.ndim
    shape[g.pi_dim(site)] = sel.size
    return float(np.sum(prob * z2.reshape(shape)) * g.psi_weight)


def zeta_roughness(q: ClassicalWaveFunction, site=0, tol=1e-8) -> float:
    """``<zeta^2>`` at ``site``: roughness of the distribution in pi.

    Computed as the integrated squared pi-derivative of ``q`` and checked
    against the quantum rule for ``zeta_hat^2`` on the transformed state.
    Raises ResolutionError when the routes disagree or when the band-edge
    part of ``<zeta^2>`` exceeds ``tol`` relative.
    """
    route_a = roughness_derivative_route(q, site)
    psi = fourier_pi_to_zeta(q)
    route_b = expect_quantum(psi, [zeta_hat(site), zeta_hat(site)])
    scale = tol * max(1.0, abs(route_b))
    if abs(route_a - route_b) > scale:
        raise ResolutionError(
            f"<zeta^2> routes disagree ({route_a:.12g} vs {route_b:.12g})"
        )
    edge = zeta_band_edge_weight(psi, site)
    if edge > scale:
        raise ResolutionError(
            f"band-edge part of <zeta^2> is {edge:.3g}: pi grid too coarse, or q reaches the pi boundary"
        )
    return route_a


@dataclass(frozen=True)
class Dispersion:
    var_phi: float
    var_sigma: float
    zeta_sq: float

    @property
    def defect(self):
        return self.var_phi - self.var_sigma - 0.25 * self.zeta_sq


def dispersion_decomposition(q: ClassicalWaveFunction, site=0, tol=1e-8) -> Dispersion:
    """Variance of the fluctuating field split into classical and roughness parts."""
    psi = fourier_pi_to_zeta(q)
    phi_mean = expect_quantum(psi, phi_hat(site))
    var_phi = expect_quantum(psi, [phi_hat(site), phi_hat(site)]) - phi_mean**2
    s_mean = expect_classical(q, lambda s, p: s[site])
    var_sigma = expect_classical(q, lambda s, p: s[site] ** 2) - s_mean**2
    result = Dispersion(var_phi, var_sigma, zeta_roughness(q, site, tol))
    if abs(result.defect) > tol * max(1.0, abs(var_phi)):
        raise IdentityViolation(f"Var(phi) - Var(sigma) - <zeta^2>/4 = {result.defect:.3g}")
    return result


def band_limit_defect(psi: ComplexWaveFunction, layers=2) -> float:
    """Largest relative amplitude within ``layers`` nodes of a grid edge.

    Checked in the (sigma, zeta) basis, in the (sigma, pi) basis and in the
    sigma-wavenumber spectrum.  Derivative operators act with spectral
    accuracy only when all three decay towards the edges.
    """
    g = psi.grid

    def edge(arr, axis):
        n = arr.shape[axis]
        sel = np.r_[0:layers, n - layers:n]
        return np.abs(np.take(arr, sel, axis=axis)).max() / np.abs(arr).max()

    v = psi.values
    in_pi = zeta_to_pi_array(g, v)
    worst = 0.0
    for i in range(g.sites):
        spec = np.fft.fftshift(np.fft.fft(v, axis=g.sigma_dim(i)), axes=g.sigma_dim(i))
        worst = max(worst, edge(v, g.sigma_dim(i)), edge(v, g.pi_dim(i)),
                    edge(in_pi, g.pi_dim(i)), edge(spec, g.sigma_dim(i)))
    return float(worst)


def commutator_apply(op_a: Operator, op_b: Operator, psi: ComplexWaveFunction,
                     band_tol=1e-6) -> ComplexWaveFunction:
    """``(A B - B A) psi`` on a band-limited state."""
    defect = band_limit_defect(psi)
    if defect > band_tol:
        raise BandLimitError(f"state not band-limited: relative edge/top-octave weight {defect:.3g}")
    ab = apply_operator(apply_operator(psi, op_b), op_a).values
    ba = apply_operator(apply_operator(psi, op_a), op_b).values
    return psi.copy(values=ab - ba)

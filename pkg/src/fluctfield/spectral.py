"""Transforms between the (sigma, pi), (sigma, zeta) and (phi, chi) pictures.

The forward transform on every pi axis is

    psi(zeta_k) = sum_j exp(i zeta_k pi_j) q(pi_j) * dpi / (2 pi)

with ``zeta_k = k * 2 pi / (N dpi)``, ``k = -N/2 .. N/2 - 1``.  Together
with the measure weights of :class:`~fluctfield.phase_space.PhaseGrid` this
is exactly unitary.  The transforms are dense ``N x N`` matrix products,
which keeps them independent of the FFT code used by the time-stepping
engines.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import RepresentationError
from .phase_space import ClassicalWaveFunction, ComplexWaveFunction, PhaseGrid

log = logging.getLogger(__name__)


@lru_cache(maxsize=32)
def _forward_matrix(grid: PhaseGrid):
    zeta = grid.zeta_nodes
    pi = grid.pi_axis.nodes
    return np.exp(1j * np.outer(zeta, pi)) * (grid.pi_axis.spacing / (2.0 * np.pi))


@lru_cache(maxsize=32)
def _inverse_matrix(grid: PhaseGrid):
    zeta = grid.zeta_nodes
    pi = grid.pi_axis.nodes
    return np.exp(-1j * np.outer(pi, zeta)) * grid.zeta_spacing


def _apply_along(matrix, values, axis):
    moved = np.moveaxis(values, axis, -1)
    return np.moveaxis(moved @ matrix.T, -1, axis)


def pi_to_zeta_array(grid: PhaseGrid, values, sites=None):
    """Forward transform of a raw array on the given pi axes (default: all)."""
    out = np.asarray(values, dtype=complex)
    for i in range(grid.sites) if sites is None else sites:
        out = _apply_along(_forward_matrix(grid), out, grid.pi_dim(i))
    return out


def zeta_to_pi_array(grid: PhaseGrid, values, sites=None):
    """Inverse transform of a raw array on the given zeta axes (default: all)."""
    out = np.asarray(values, dtype=complex)
    for i in range(grid.sites) if sites is None else sites:
        out = _apply_along(_inverse_matrix(grid), out, grid.pi_dim(i))
    return out


def fourier_pi_to_zeta(q: ClassicalWaveFunction) -> ComplexWaveFunction:
    return ComplexWaveFunction(q.grid, pi_to_zeta_array(q.grid, q.values), q.time)


def mirrored(psi: ComplexWaveFunction) -> np.ndarray:
    """Values of ``psi(sigma, -zeta)`` on the same nodes."""
    grid = psi.grid
    v = psi.values
    idx = grid.mirror_index()
    for i in range(grid.sites):
        v = np.take(v, idx, axis=grid.pi_dim(i))
    return v


def selection_rule_violation(psi: ComplexWaveFunction) -> float:
    """``max |psi(sigma,-zeta) - conj psi(sigma,zeta)|`` relative to ``max |psi|``."""
    scale = np.abs(psi.values).max()
    if scale == 0:
        return 0.0
    return float(np.abs(mirrored(psi) - np.conj(psi.values)).max() / scale)


def fourier_zeta_to_pi(psi: ComplexWaveFunction, tol=1e-8, imag_tol=1e-10) -> ClassicalWaveFunction:
    """Inverse transform; only defined for states obeying the selection rule."""
    violation = selection_rule_violation(psi)
    if violation > tol:
        raise RepresentationError(
            f"selection rule violated by {violation:.3g}: psi does not encode a real classical state"
        )
    full = zeta_to_pi_array(psi.grid, psi.values)
    residue = float(np.abs(full.imag).max())
    if residue > imag_tol:
        log.warning("imaginary residue %.3g after inverse transform", residue)
    else:
        log.debug("imaginary residue %.3g discarded", residue)
    return ClassicalWaveFunction(psi.grid, full.real.copy(), psi.time)


def time_reverse(q: ClassicalWaveFunction) -> ClassicalWaveFunction:
    """``q(sigma, pi) -> q(sigma, -pi)`` on the (periodic) pi grid."""
    grid = q.grid
    v = q.values
    idx = grid.pi_reflection_index()
    for i in range(grid.sites):
        v = np.take(v, idx, axis=grid.pi_dim(i))
    return q.copy(values=v)


@dataclass
class MirrorView:
    """Complex wave function labelled by fluctuating and mirror field values.

    Storage stays on (sigma, zeta) nodes; ``phi = sigma + zeta/2`` and
    ``chi = sigma - zeta/2`` are derived labels, so no resampling occurs.
    """

    psi: ComplexWaveFunction

    @property
    def values(self):
        return self.psi.values

    @property
    def grid(self):
        return self.psi.grid

    def phi(self, site=0):
        return self.grid.sigma(site) + 0.5 * self.grid.zeta(site)

    def chi(self, site=0):
        return self.grid.sigma(site) - 0.5 * self.grid.zeta(site)

    def swapped(self) -> np.ndarray:
        """Values of ``psi(chi, phi)``: exchanging the labels flips zeta."""
        return mirrored(self.psi)

    def conjugation_defect(self) -> float:
        """``max |conj psi(phi, chi) - psi(chi, phi)|``."""
        return float(np.abs(np.conj(self.values) - self.swapped()).max())


def to_mirror_view(psi: ComplexWaveFunction) -> MirrorView:
    return MirrorView(psi)


def from_mirror_view(view: MirrorView) -> ComplexWaveFunction:
    return view.psi

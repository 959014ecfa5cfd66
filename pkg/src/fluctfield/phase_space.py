"""Phase-space grids and wave-function containers.

A classical state of ``sites`` field degrees of freedom is described by a
real wave function ``q(sigma, pi)`` whose square is the phase-space
probability density.  Arrays are laid out with all sigma axes first and
all pi (or zeta) axes after them::

    values.shape == (n_sigma,) * sites + (n_pi,) * sites

The discrete measure carries the 2*pi factor on the momentum side:
``dsigma * dpi / (2 pi)`` per site for ``q`` and ``dsigma * dzeta`` per
site for the complex wave function.  With the zeta axis chosen as the
exact DFT dual of the pi axis the pi <-> zeta transform is then unitary
(see :mod:`fluctfield.spectral`).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import FeasibilityError, GridError, NormError, SupportError

MAX_GRID_SITES = 2


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the lattice Klein-Gordon model with quartic coupling.

    ``laplacian_prefactor`` multiplies ``(1/eps^2) * sum_k (...)`` in the
    discrete Laplacian.  The default 0.5 reproduces the automaton force
    ``1/(2 eps^2)``; 1.0 is the standard lattice Laplacian.
    """

    mass_squared: float
    coupling: float = 0.0
    spatial_dim: int = 0
    lattice_spacing: float = 0.01
    laplacian_prefactor: float = 0.5

    def __post_init__(self):
        problems = []
        if not math.isfinite(self.mass_squared):
            problems.append("mass_squared must be finite")
        if not (self.coupling >= 0 and math.isfinite(self.coupling)):
            problems.append("coupling must be finite and >= 0")
        if int(self.spatial_dim) != self.spatial_dim or self.spatial_dim < 0:
            problems.append("spatial_dim must be a non-negative integer")
        if not (self.lattice_spacing > 0 and math.isfinite(self.lattice_spacing)):
            problems.append("lattice_spacing must be finite and > 0")
        if not (self.laplacian_prefactor >= 0):
            problems.append("laplacian_prefactor must be >= 0")
        if problems:
            raise GridError("; ".join(problems))
        object.__setattr__(self, "spatial_dim", int(self.spatial_dim))

    @property
    def eps(self):
        return self.lattice_spacing

    def with_spacing(self, eps):
        return replace(self, lattice_spacing=eps)


@dataclass(frozen=True)
class Axis:
    """Uniform node-centred axis: ``center + spacing * (j - count // 2)``."""

    center: float
    spacing: float
    count: int

    def __post_init__(self):
        if self.count < 2 or self.count % 2:
            raise GridError(f"axis count must be even and >= 2, got {self.count}")
        if not self.spacing > 0:
            raise GridError(f"axis spacing must be > 0, got {self.spacing}")

    @property
    def nodes(self) -> np.ndarray:
        return self.center + self.spacing * (np.arange(self.count) - self.count // 2)

    @property
    def lo(self):
        return self.center - self.spacing * (self.count // 2)

    @property
    def hi(self):
        return self.center + self.spacing * (self.count // 2 - 1)

    @property
    def period(self):
        return self.spacing * self.count


@dataclass(frozen=True)
class PhaseGrid:
    """Tensor-product phase-space grid for ``sites`` field values.

    The pi axis must contain ``pi = 0`` modulo its spacing, i.e. its centre
    is an integer multiple of the spacing.  This makes ``zeta -> -zeta``
    an exact symmetry of the dual grid, Nyquist node included.
    """

    sigma_axis: Axis
    pi_axis: Axis
    sites: int = 1

    def __post_init__(self):
        if self.sites < 1:
            raise GridError("sites must be >= 1")
        if self.sites > MAX_GRID_SITES:
            raise FeasibilityError(
                f"phase-space grids are limited to {MAX_GRID_SITES} sites "
                f"(got {self.sites}); use the ensemble automaton instead"
            )
        ratio = self.pi_axis.center / self.pi_axis.spacing
        if abs(ratio - round(ratio)) > 1e-9:
            raise GridError("pi_axis.center must be an integer multiple of pi_axis.spacing")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.sigma_axis.count,) * self.sites + (self.pi_axis.count,) * self.sites

    @property
    def ndim(self) -> int:
        return 2 * self.sites

    def sigma_dim(self, site: int) -> int:
        self._check_site(site)
        return site

    def pi_dim(self, site: int) -> int:
        self._check_site(site)
        return self.sites + site

    def _check_site(self, site):
        if not 0 <= site < self.sites:
            raise GridError(f"site {site} out of range for {self.sites}-site grid")

    def _along(self, dim, values):
        shape = [1] * self.ndim
        shape[dim] = values.size
        return values.reshape(shape)

    # coordinate arrays, broadcastable against the full grid
    def sigma(self, site: int = 0) -> np.ndarray:
        return self._along(self.sigma_dim(site), self.sigma_axis.nodes)

    def pi(self, site: int = 0) -> np.ndarray:
        return self._along(self.pi_dim(site), self.pi_axis.nodes)

    @property
    def zeta_spacing(self) -> float:
        return 2.0 * np.pi / self.pi_axis.period

    @property
    def zeta_nodes(self) -> np.ndarray:
        n = self.pi_axis.count
        return self.zeta_spacing * (np.arange(n) - n // 2)

    def zeta(self, site: int = 0) -> np.ndarray:
        return self._along(self.pi_dim(site), self.zeta_nodes)

    @property
    def odd_zeta_nodes(self) -> np.ndarray:
        """Zeta nodes with the Nyquist node set to 0.

        The Nyquist node is its own mirror image, so any operator odd under
        ``zeta -> -zeta`` must vanish there.
        """
        z = self.zeta_nodes.copy()
        z[0] = 0.0
        return z

    def odd_zeta(self, site: int = 0) -> np.ndarray:
        return self._along(self.pi_dim(site), self.odd_zeta_nodes)

    @property
    def q_weight(self) -> float:
        """Measure weight of one node for a classical wave function."""
        return (self.sigma_axis.spacing * self.pi_axis.spacing / (2.0 * np.pi)) ** self.sites

    @property
    def psi_weight(self) -> float:
        """Measure weight of one node for a complex wave function."""
        return (self.sigma_axis.spacing * self.zeta_spacing) ** self.sites

    def mirror_index(self) -> np.ndarray:
        """Index permutation of a zeta axis realising ``zeta -> -zeta``."""
        n = self.pi_axis.count
        return (-np.arange(n)) % n

    def pi_reflection_index(self) -> np.ndarray:
        """Index permutation of a pi axis realising ``pi -> -pi`` (periodically)."""
        n = self.pi_axis.count
        m = int(round(self.pi_axis.center / self.pi_axis.spacing))
        return (n - 2 * m - np.arange(n)) % n


def _site_values(value, sites, name):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (sites,))
    if not np.all(np.isfinite(arr)):
        raise GridError(f"{name} must be finite")
    return arr


@dataclass
class ClassicalWaveFunction:
    grid: PhaseGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")

    @property
    def weight(self):
        return self.grid.q_weight

    def norm_sq(self) -> float:
        return float(np.sum(self.values**2) * self.weight)

    def copy(self, values=None, time=None):
        return ClassicalWaveFunction(
            self.grid,
            self.values.copy() if values is None else values,
            self.time if time is None else time,
        )


@dataclass
class ComplexWaveFunction:
    """Complex wave function on the (sigma, zeta) grid."""

    grid: PhaseGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise GridError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")

    @property
    def weight(self):
        return self.grid.psi_weight

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.weight)

    def copy(self, values=None, time=None):
        return ComplexWaveFunction(
            self.grid,
            self.values.copy() if values is None else values,
            self.time if time is None else time,
        )


def make_gaussian_q(grid, mean_sigma=0.0, mean_pi=0.0, width_sigma=1.0, width_pi=1.0,
                    min_support=6.0, time=0.0) -> ClassicalWaveFunction:
    """Normalised Gaussian classical wave function (product over sites).

    ``q**2`` has mean ``(mean_sigma, mean_pi)`` and standard deviations
    ``(width_sigma, width_pi)`` at every site; means and widths may be
    scalars or per-site sequences.  Raises :class:`SupportError` when the
    Gaussian comes closer than ``min_support`` widths to a grid edge.
    """
    s = grid.sites
    mu_s = _site_values(mean_sigma, s, "mean_sigma")
    mu_p = _site_values(mean_pi, s, "mean_pi")
    w_s = _site_values(width_sigma, s, "width_sigma")
    w_p = _site_values(width_pi, s, "width_pi")
    if np.any(w_s <= 0) or np.any(w_p <= 0):
        raise GridError("Gaussian widths must be > 0")

    for axis, mu, w, label in ((grid.sigma_axis, mu_s, w_s, "sigma"), (grid.pi_axis, mu_p, w_p, "pi")):
        room = np.minimum(mu - axis.lo, axis.hi - mu) / w
        if np.any(room < min_support):
            raise SupportError(
                f"{label} axis [{axis.lo:g}, {axis.hi:g}] leaves only {room.min():.2f} widths "
                f"of support (need {min_support})"
            )

    log_q = np.zeros(grid.shape)
    for i in range(s):
        log_q = log_q - (grid.sigma(i) - mu_s[i]) ** 2 / (4 * w_s[i] ** 2)
        log_q = log_q - (grid.pi(i) - mu_p[i]) ** 2 / (4 * w_p[i] ** 2)
    q = ClassicalWaveFunction(grid, np.exp(log_q), time)
    return normalize(q)[0]


def normalize(wf):
    """Rescale to unit discrete norm.

    Returns ``(normalised, defect)`` where ``defect = norm_sq - 1`` of the
    input, so a unit input reports 0 and an input scaled by 2 reports 3.
    """
    n2 = wf.norm_sq()
    if not (n2 > 0 and math.isfinite(n2)):
        raise NormError(f"cannot normalise a wave function with norm^2 = {n2}")
    return wf.copy(values=wf.values / math.sqrt(n2)), n2 - 1.0


def to_probability(q: ClassicalWaveFunction) -> np.ndarray:
    """Phase-space probability ``w = q**2`` (sums to 1 with ``grid.q_weight``)."""
    return q.values**2


def dump_csv(wf, path):
    """Write a wave function as CSV rows ``sigma_index, pi_or_zeta_index, re, im``.

    For two-site grids the indices are flat C-order indices of the sigma
    block and of the pi/zeta block.
    """
    g = wf.grid
    n_sig = g.sigma_axis.count**g.sites
    flat = np.asarray(wf.values).reshape(n_sig, -1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sigma_index", "pi_or_zeta_index", "re", "im"])
        for i in range(flat.shape[0]):
            for j in range(flat.shape[1]):
                v = complex(flat[i, j])
                w.writerow([i, j, repr(v.real), repr(v.imag)])


def default_grid(width_sigma=1.0, width_pi=1.0, count=64, span=8.0, sites=1,
                 center_sigma=0.0, center_pi=0.0) -> PhaseGrid:
    """Symmetric grid covering +-``span`` widths around the given centres."""
    ds = 2 * span * width_sigma / count
    dp = 2 * span * width_pi / count
    cp = round(center_pi / dp) * dp
    return PhaseGrid(Axis(center_sigma, ds, count), Axis(cp, dp, count), sites)


@dataclass(frozen=True)
class GaussianSpec:
    """Per-site Gaussian initial data shared by grid and ensemble engines."""

    mean_sigma: float | Sequence[float] = 0.0
    mean_pi: float | Sequence[float] = 0.0
    width_sigma: float | Sequence[float] = 1.0
    width_pi: float | Sequence[float] = 1.0

"""Automaton updates and transport of the classical wave function.

One automaton *block* advances time by ``2 eps`` and is the composition of
two substeps with opposite order::

    pi_first:     pi <- pi + eps F(sigma);  sigma <- sigma + eps pi
    sigma_first:  sigma <- sigma + eps pi;  pi <- pi + eps F(sigma)

i.e. kick(eps) drift(2 eps) kick(eps).  Every substep is a composition of
shears with unit Jacobian, so the grid transport of ``q`` reduces to
translations along single axes.  These are applied either exactly on the
trigonometric interpolant (``interpolation="spectral"``) or with 4-point
Lagrange interpolation (``"cubic"``).
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryLeakError, DivergenceError, FeasibilityError, StabilityError
from .phase_space import ClassicalWaveFunction, ModelParams, PhaseGrid, normalize

log = logging.getLogger(__name__)


class Order(enum.Enum):
    PI_FIRST = "pi_first"
    SIGMA_FIRST = "sigma_first"


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class StepDirection:
    order: Order = Order.PI_FIRST
    direction: Direction = Direction.FORWARD

    def reversed_order(self):
        other = Order.SIGMA_FIRST if self.order is Order.PI_FIRST else Order.PI_FIRST
        return StepDirection(other, self.direction)


BLOCK = (StepDirection(Order.PI_FIRST), StepDirection(Order.SIGMA_FIRST))


@dataclass
class FieldConfiguration:
    """Classical microstate. Lattice axes are the trailing ``spatial_dim`` axes.

    Leading axes (if any) index independent members, so a stacked ensemble
    is also a valid configuration.
    """

    sigma: np.ndarray
    pi: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.pi = np.asarray(self.pi, dtype=float)
        if self.sigma.shape != self.pi.shape:
            raise ValueError(f"sigma shape {self.sigma.shape} != pi shape {self.pi.shape}")

    def copy(self):
        return FieldConfiguration(self.sigma.copy(), self.pi.copy(), self.time)


def laplacian(sigma, params: ModelParams):
    """Periodic nearest-neighbour Laplacian times ``prefactor / eps**2``."""
    d = params.spatial_dim
    if d == 0 or params.laplacian_prefactor == 0:
        return np.zeros_like(sigma)
    if sigma.ndim < d:
        raise ValueError(f"field with {sigma.ndim} axes cannot carry a {d}-dimensional lattice")
    out = -2.0 * d * sigma
    for ax in range(-d, 0):
        out = out + np.roll(sigma, 1, axis=ax) + np.roll(sigma, -1, axis=ax)
    return (params.laplacian_prefactor / params.eps**2) * out


def force(sigma, params: ModelParams):
    """``F = lap(sigma) - m^2 sigma - (lambda/2) sigma^3`` on a periodic lattice."""
    sigma = np.asarray(sigma, dtype=float)
    f = -params.mass_squared * sigma - 0.5 * params.coupling * sigma**3
    if params.spatial_dim:
        f = f + laplacian(sigma, params)
    return f


def max_frequency_sq(params: ModelParams):
    """Largest squared frequency of the linearised lattice dynamics."""
    return params.mass_squared + 4.0 * params.spatial_dim * params.laplacian_prefactor / params.eps**2


def stability_margin(params: ModelParams):
    """``eps^2 * omega_max^2``; the linear block map is stable iff this is in [0, 1)."""
    return params.eps**2 * max_frequency_sq(params)


def check_stability(params: ModelParams):
    margin = stability_margin(params)
    if not 0 <= margin < 1:
        raise StabilityError(
            f"eps^2 * omega_max^2 = {margin:.4g} outside [0, 1): the 2*eps block is linearly "
            f"unstable (reduce eps or laplacian_prefactor)"
        )
    if params.coupling > 0:
        log.debug("quartic coupling: stability also depends on field amplitude")
    return margin


def step_update(config: FieldConfiguration, params: ModelParams, step: StepDirection = BLOCK[0],
                step_index=None) -> FieldConfiguration:
    """One substep of length ``eps``; the backward direction is its exact inverse."""
    eps = params.eps
    s, p = config.sigma, config.pi
    fwd = step.direction is Direction.FORWARD
    if step.order is Order.PI_FIRST:
        if fwd:
            p = p + eps * force(s, params)
            s = s + eps * p
        else:
            s = s - eps * p
            p = p - eps * force(s, params)
    else:
        if fwd:
            s = s + eps * p
            p = p + eps * force(s, params)
        else:
            p = p - eps * force(s, params)
            s = s - eps * p
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(p))):
        bad = None
        if s.ndim > params.spatial_dim:
            member_axes = tuple(range(s.ndim - params.spatial_dim, s.ndim))
            finite = np.isfinite(s).all(axis=member_axes) & np.isfinite(p).all(axis=member_axes)
            bad = int(np.flatnonzero(~finite.ravel())[0])
        raise DivergenceError(
            f"non-finite field values at step {step_index}"
            + (f" (member {bad})" if bad is not None else ""),
            step=step_index, member=bad,
        )
    dt = eps if fwd else -eps
    return FieldConfiguration(s, p, config.time + dt)


def block_update(config, params, backward=False, step_index=None):
    """Advance (or retreat) one full ``2 eps`` block."""
    if backward:
        seq = [StepDirection(st.order, Direction.BACKWARD) for st in reversed(BLOCK)]
    else:
        seq = BLOCK
    for st in seq:
        config = step_update(config, params, st, step_index)
    return config


# ---------------------------------------------------------------------------
# grid transport

def _grid_lattice_shape(grid: PhaseGrid, params: ModelParams):
    if grid.sites == 1:
        return (1,) * params.spatial_dim
    if params.spatial_dim != 1:
        raise FeasibilityError("a two-site phase-space grid requires spatial_dim = 1")
    return (grid.sites,)


def grid_forces(grid: PhaseGrid, params: ModelParams):
    """Force at each site evaluated on the sigma sub-grid, broadcastable to ``grid.shape``."""
    lat = _grid_lattice_shape(grid, params)
    s = grid.sites
    sig_shape = (grid.sigma_axis.count,) * s
    stacked = np.empty(sig_shape + (s,))
    nodes = grid.sigma_axis.nodes
    for i in range(s):
        shape = [1] * s
        shape[i] = nodes.size
        stacked[..., i] = np.broadcast_to(nodes.reshape(shape), sig_shape)
    f = force(stacked.reshape(sig_shape + lat), params).reshape(sig_shape + (s,))
    return [f[..., i].reshape(sig_shape + (1,) * s) for i in range(s)]


def _wavenumbers(n, spacing):
    k = 2.0 * np.pi * np.fft.fftfreq(n, spacing)
    k[n // 2] = 0.0  # Nyquist mode carries no phase: keeps real data real
    return k


def _along(k, axis, ndim):
    shape = [1] * ndim
    shape[axis] = k.size
    return k.reshape(shape)


def spectral_shift(values, axis, spacing, shift):
    """``out(x) = values(x - shift)`` on the periodic trigonometric interpolant.

    ``shift`` must broadcast against ``values`` and be constant along ``axis``.
    """
    k = _along(_wavenumbers(values.shape[axis], spacing), axis, values.ndim)
    spec = np.fft.fft(values, axis=axis)
    out = np.fft.ifft(spec * np.exp(-1j * k * shift), axis=axis)
    return out.real if np.isrealobj(values) else out


def cubic_shift(values, axis, spacing, shift):
    """``out(x) = values(x - shift)`` by periodic 4-point Lagrange interpolation."""
    n = values.shape[axis]
    idx = _along(np.arange(n), axis, values.ndim)
    src = idx - np.broadcast_to(shift, np.broadcast_shapes(np.shape(shift), values.shape)) / spacing
    i0 = np.floor(src).astype(int)
    t = src - i0
    weights = (
        -t * (t - 1) * (t - 2) / 6,
        (t + 1) * (t - 1) * (t - 2) / 2,
        -(t + 1) * t * (t - 2) / 2,
        (t + 1) * t * (t - 1) / 6,
    )
    out = np.zeros(np.broadcast_shapes(values.shape, src.shape), dtype=values.dtype)
    vals = np.broadcast_to(values, out.shape)
    for off, w in zip((-1, 0, 1, 2), weights):
        out = out + w * np.take_along_axis(vals, (i0 + off) % n, axis=axis)
    return out


_SHIFTS = {"spectral": spectral_shift, "cubic": cubic_shift}


def _transport_substep(values, grid, params, forces, order: Order, shift):
    eps = params.eps
    ds, dp = grid.sigma_axis.spacing, grid.pi_axis.spacing

    def kick(v):
        for i in range(grid.sites):
            v = shift(v, grid.pi_dim(i), dp, eps * forces[i])
        return v

    def drift(v):
        for i in range(grid.sites):
            v = shift(v, grid.sigma_dim(i), ds, eps * grid.pi(i))
        return v

    return drift(kick(values)) if order is Order.PI_FIRST else kick(drift(values))


def edge_mass(q: ClassicalWaveFunction, layers=2):
    """Largest fraction of ``q**2`` found within ``layers`` nodes of any grid face."""
    w = q.values**2
    total = w.sum()
    worst = 0.0
    for ax in range(w.ndim):
        lo = np.take(w, range(layers), axis=ax).sum()
        hi = np.take(w, range(w.shape[ax] - layers, w.shape[ax]), axis=ax).sum()
        worst = max(worst, (lo + hi) / total)
    return float(worst)


def evolve_q_step_with_defect(q: ClassicalWaveFunction, params: ModelParams, interpolation="spectral",
                              leak_tol=1e-6, forces=None):
    """One ``2 eps`` block of semi-Lagrangian transport; returns ``(q, norm_defect)``."""
    shift = _SHIFTS[interpolation]
    grid = q.grid
    if forces is None:
        forces = grid_forces(grid, params)
    v = q.values
    for st in BLOCK:
        v = _transport_substep(v, grid, params, forces, st.order, shift)
    if not np.all(np.isfinite(v)):
        raise DivergenceError("non-finite wave function after transport step")
    out, defect = normalize(q.copy(values=v, time=q.time + 2 * params.eps))
    leak = edge_mass(out)
    if leak > leak_tol:
        raise BoundaryLeakError(f"{leak:.3g} of the probability sits at the grid edge at t={out.time:.6g}")
    log.debug("transport step t=%.6g norm defect %.3e", out.time, defect)
    return out, defect


def evolve_q_step(q: ClassicalWaveFunction, params: ModelParams, interpolation="spectral",
                  leak_tol=1e-6) -> ClassicalWaveFunction:
    """Advance ``q`` by one block: ``q(t + 2 eps; z) = q(t; S^-1 z)``."""
    return evolve_q_step_with_defect(q, params, interpolation, leak_tol)[0]


def evolve_q(q: ClassicalWaveFunction, params: ModelParams, n_blocks, interpolation="spectral",
             leak_tol=1e-6, callback=None):
    """Advance ``n_blocks`` blocks; returns ``(q, defects)``.

    ``callback(block_index, q)`` is invoked after every block.
    """
    forces = grid_forces(q.grid, params)
    defects = np.empty(n_blocks)
    for n in range(n_blocks):
        q, defects[n] = evolve_q_step_with_defect(q, params, interpolation, leak_tol, forces)
        if callback is not None:
            callback(n + 1, q)
    return q, defects


def spectral_derivative(values, axis, spacing):
    k = _along(_wavenumbers(values.shape[axis], spacing), axis, values.ndim)
    out = np.fft.ifft(1j * k * np.fft.fft(values, axis=axis), axis=axis)
    return out.real if np.isrealobj(values) else out


def liouville_rhs(q: ClassicalWaveFunction, params: ModelParams) -> np.ndarray:
    """``-L q`` with ``L = sum_sites (pi d/dsigma + F d/dpi)``, spectral derivatives."""
    grid = q.grid
    forces = grid_forces(grid, params)
    rhs = np.zeros_like(q.values)
    for i in range(grid.sites):
        rhs -= grid.pi(i) * spectral_derivative(q.values, grid.sigma_dim(i), grid.sigma_axis.spacing)
        rhs -= forces[i] * spectral_derivative(q.values, grid.pi_dim(i), grid.pi_axis.spacing)
    return rhs

"""Ensemble engine for the cellular automaton on arbitrary periodic lattices.

Members are stored stacked: ``sigma`` and ``pi`` have shape
``(n_members, *lattice_shape)`` and all members are advanced together.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GridError
from .phase_space import ModelParams
from .transport import FieldConfiguration, block_update, check_stability

SEED_BLOCK = 1024
SNAPSHOT_MAGIC = b"FFEN"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class InitialSpec:
    """Product-Gaussian initial distribution ``q^2(t_in)``.

    Means and widths broadcast against ``lattice_shape``.
    """

    lattice_shape: tuple[int, ...] = ()
    mean_sigma: float | Sequence = 0.0
    mean_pi: float | Sequence = 0.0
    width_sigma: float | Sequence = 1.0
    width_pi: float | Sequence = 1.0

    def arrays(self):
        shape = tuple(self.lattice_shape)
        out = [np.broadcast_to(np.asarray(v, dtype=float), shape)
               for v in (self.mean_sigma, self.mean_pi, self.width_sigma, self.width_pi)]
        if np.any(out[2] <= 0) or np.any(out[3] <= 0):
            raise ValueError("Gaussian widths must be > 0")
        return out


@dataclass
class Ensemble:
    sigma: np.ndarray
    pi: np.ndarray
    seed: int = 0
    time: float = 0.0
    initial_spec: InitialSpec | None = field(default=None, compare=False)

    def __len__(self):
        return self.sigma.shape[0]

    @property
    def lattice_shape(self):
        return self.sigma.shape[1:]

    def __getitem__(self, i) -> FieldConfiguration:
        return FieldConfiguration(self.sigma[i], self.pi[i], self.time)

    @property
    def members(self) -> list[FieldConfiguration]:
        return [self[i] for i in range(len(self))]

    def as_configuration(self) -> FieldConfiguration:
        return FieldConfiguration(self.sigma, self.pi, self.time)

    def replace(self, config: FieldConfiguration) -> "Ensemble":
        return Ensemble(config.sigma, config.pi, self.seed, config.time, self.initial_spec)

    def time_reversed(self) -> "Ensemble":
        return Ensemble(self.sigma.copy(), -self.pi, self.seed, self.time, self.initial_spec)


def sample_initial(spec: InitialSpec, n: int, seed: int) -> Ensemble:
    """Draw ``n`` independent configurations from the product Gaussian.

    Members are generated in fixed blocks of ``SEED_BLOCK``, each from its
    own generator keyed by ``(seed, block_index)``, so any member can be
    reproduced without generating the others.
    """
    if n < 1:
        raise ValueError("ensemble needs at least one member")
    mu_s, mu_p, w_s, w_p = spec.arrays()
    lat = tuple(spec.lattice_shape)
    sigma = np.empty((n,) + lat)
    pi = np.empty((n,) + lat)
    for b, start in enumerate(range(0, n, SEED_BLOCK)):
        stop = min(start + SEED_BLOCK, n)
        rng = np.random.default_rng([int(seed), b])
        z = rng.standard_normal((SEED_BLOCK, 2) + lat)[: stop - start]
        sigma[start:stop] = mu_s + w_s * z[:, 0]
        pi[start:stop] = mu_p + w_p * z[:, 1]
    return Ensemble(sigma, pi, int(seed), 0.0, spec)


def run_automaton(ens: Ensemble, params: ModelParams, n_blocks: int, backward=False,
                  check=True, callback: Callable[[int, Ensemble], None] | None = None) -> Ensemble:
    """Advance every member by ``n_blocks`` blocks of ``2 eps``.

    ``callback(block_index, ensemble)`` runs after each block.  With
    ``check`` the linear stability bound is enforced before stepping.
    """
    if check:
        check_stability(params)
    if len(ens.lattice_shape) != params.spatial_dim:
        raise GridError(
            f"lattice rank {len(ens.lattice_shape)} does not match spatial_dim {params.spatial_dim}"
        )
    config = ens.as_configuration()
    for n in range(n_blocks):
        config = block_update(config, params, backward=backward, step_index=n)
        if callback is not None:
            callback(n + 1, ens.replace(config))
    return ens.replace(config)


@dataclass(frozen=True)
class Estimate:
    mean: float
    std_error: float
    n: int


def ensemble_expect(ens: Ensemble, observable: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Estimate:
    """Sample mean and standard error of a per-member observable.

    ``observable(sigma, pi)`` receives the stacked member arrays and must
    return one value per member.
    """
    n = len(ens)
    if n < 2:
        raise ValueError("standard error needs at least two members")
    vals = np.asarray(observable(ens.sigma, ens.pi), dtype=float).reshape(n, -1)
    if vals.shape[1] != 1:
        raise ValueError("observable must return one value per member")
    vals = vals[:, 0]
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n)), n)


def energy(config: FieldConfiguration, params: ModelParams) -> np.ndarray:
    """Lattice energy, summed over sites (one value per member).

    Matches the force: ``sum_x [pi^2/2 + (c/2 eps^2) sum_k (d_k sigma)^2
    + m^2 sigma^2/2 + lambda sigma^4/8]`` with ``c`` the Laplacian prefactor.
    """
    s, p = config.sigma, config.pi
    dens = 0.5 * p**2 + 0.5 * params.mass_squared * s**2 + params.coupling / 8.0 * s**4
    d = params.spatial_dim
    if d:
        grad = sum((np.roll(s, -1, axis=ax) - s) ** 2 for ax in range(-d, 0))
        dens = dens + 0.5 * params.laplacian_prefactor / params.eps**2 * grad
        dens = dens.sum(axis=tuple(range(-d, 0)))
    return dens


def energy_drift(history: Sequence[FieldConfiguration | Ensemble], params: ModelParams) -> np.ndarray:
    """``E(t) - E(0)`` for each configuration in ``history``."""
    configs = [h.as_configuration() if isinstance(h, Ensemble) else h for h in history]
    e = np.array([energy(c, params) for c in configs])
    return e - e[0]


def write_snapshot(ens: Ensemble, path):
    """Binary restart file, little-endian.

    Layout: ``b"FFEN"``, u32 version, u32 D, D x u32 dims, u64 n, u64 seed,
    f64 time, then for each member the row-major sigma block followed by
    the pi block as f64.
    """
    lat = ens.lattice_shape
    header = SNAPSHOT_MAGIC + struct.pack("<II", SNAPSHOT_VERSION, len(lat))
    header += struct.pack(f"<{len(lat)}I", *lat)
    header += struct.pack("<QQd", len(ens), ens.seed, ens.time)
    body = np.stack([ens.sigma, ens.pi], axis=1).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes(order="C"))


def read_snapshot(path) -> Ensemble:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != SNAPSHOT_MAGIC:
        raise ValueError("not an ensemble snapshot")
    version, d = struct.unpack_from("<II", data, 4)
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    off = 12
    lat = struct.unpack_from(f"<{d}I", data, off)
    off += 4 * d
    n, seed, time = struct.unpack_from("<QQd", data, off)
    off += 24
    body = np.frombuffer(data, dtype="<f8", offset=off).reshape((n, 2) + tuple(lat))
    return Ensemble(body[:, 0].astype(float), body[:, 1].astype(float), seed, time)

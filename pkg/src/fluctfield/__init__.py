"""Probabilistic lattice Klein-Gordon field theory and its fluctuating-field description.

Classical phase-space probabilities are evolved either as real wave
functions on a grid (:mod:`~fluctfield.transport`), as complex wave
functions after a Fourier transform in the momentum field
(:mod:`~fluctfield.schroedinger`), or by sampling trajectories of the
cellular automaton (:mod:`~fluctfield.automaton`).
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .phase_space import (Axis, ClassicalWaveFunction, ComplexWaveFunction, ModelParams, PhaseGrid,
                          default_grid, dump_csv, make_gaussian_q, normalize, to_probability)
from .spectral import fourier_pi_to_zeta, fourier_zeta_to_pi, selection_rule_violation
from .transport import FieldConfiguration, block_update, evolve_q, step_update
from .observables import (expect_classical, expect_quantum, dispersion_decomposition, zeta_roughness,
                          commutator_apply)
from .schroedinger import HamiltonianSpec, evolve_psi, route_consistency
from .automaton import Ensemble, InitialSpec, ensemble_expect, run_automaton, sample_initial
from .effective_action import (PowerSeries, minkowski_action, one_loop_sum, saddle_consistency,
                               solve_mirror_series, tree_level_delta_s)

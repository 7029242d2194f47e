"""Sparse simulation of rf-pulse quantum logic on an Ising spin chain.

The package models a linear chain of spin-1/2 nuclei with nearest-neighbor
Ising coupling J and a linear Larmor-frequency gradient, driven by resonant
and near-resonant rectangular rf pulses.  Because each pulse couples a
configuration only to the one obtained by flipping the addressed spin, the
dynamics factorizes into 2x2 blocks and a sparse amplitude map tracks the
full many-spin state for chains of a thousand spins.

Layers, bottom up:

- ``chain``     static model: basis configurations, energies, resonance table
- ``engine``    pulse propagation over the sparse amplitude map
- ``sequence``  the remote-controlled-NOT pulse compiler and distortions
- ``oracles``   independent references: analytic product form, dense solvers
- ``analysis``  unwanted-state census, probability bands, parameter sweeps
- ``io`` / ``config`` / ``cli``  deterministic artifacts and the command line
"""

from .chain import (
    ApproximationWarning,
    BasisState,
    ChainParams,
    LabParams,
    energy,
    excitation_gap,
    flip,
    resonant_frequency_set,
    transition_frequency,
)
from .engine import (
    AddressingError,
    NumericalIntegrityError,
    PairPropagator,
    PRUNE_THRESHOLD,
    Pulse,
    SparseState,
    TraceRow,
    apply_pulse,
    pair_detuning,
    run_sequence,
    target_spin,
    two_level_step,
)

__version__ = "0.1.0"

__all__ = [
    "AddressingError",
    "ApproximationWarning",
    "BasisState",
    "ChainParams",
    "LabParams",
    "NumericalIntegrityError",
    "PRUNE_THRESHOLD",
    "PairPropagator",
    "Pulse",
    "SparseState",
    "TraceRow",
    "apply_pulse",
    "energy",
    "excitation_gap",
    "flip",
    "pair_detuning",
    "resonant_frequency_set",
    "run_sequence",
    "target_spin",
    "transition_frequency",
    "two_level_step",
    "__version__",
]

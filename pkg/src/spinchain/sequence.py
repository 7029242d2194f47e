"""Compiler for the remote controlled-NOT pulse program, plus distortions.

The program entangles the two ends of the chain.  A pi/2 pulse splits the
ground state into a superposition with the last spin flipped; a train of
pi pulses then walks that excitation down the chain and back out, leaving
only spins N-1 and 0 flipped in the moving branch.  Each pi pulse is
compiled exactly resonant for the moving branch, which fixes its frequency
through the local resonance table: the stationary ground branch then sits
2J off resonance for every pulse except the first unflip, which is 4J off.

Pulse count: one pi/2 plus L = 2N-3 pi pulses.  The pi-pulse ordinal runs
from 1 (the pi/2 pulse is ordinal 0), so "the third pi pulse" is the 4J one.

Off-resonant leakage from the ground branch is controlled by the Rabi
frequency: choosing Omega = |Delta| / sqrt(4 k^2 - 1) makes a pi pulse
complete k full off-resonant cycles (Omega_e tau = 2 pi k), nulling the
transition entirely.  Distortions of the Figs.-style scenarios perturb
Omega on a block of pulse ordinals to break that condition deliberately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .chain import BasisState, ChainParams, _excitation_gap_bits
from .engine import Pulse, pair_detuning

DISTORTION_MODES = ("fixed_offset", "uniform_random")


def omega_for_2pik(delta: float, k: int) -> float:
    """Rabi frequency making a pi pulse also a 2*pi*k pulse at detuning delta.

    Requires Omega_e * tau = 2 pi k with Omega * tau = pi, i.e.
    Omega = |delta| / sqrt(4 k^2 - 1).  k = 0 has no solution (it would need
    infinite Omega) and is rejected.
    """
    if not isinstance(k, (int, np.integer)) or isinstance(k, bool):
        raise TypeError(f"k must be an integer, got {k!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if delta == 0.0:
        raise ValueError("delta must be nonzero; a resonant pulse has no 2*pi*k point")
    return abs(delta) / math.sqrt(4.0 * k * k - 1.0)


@dataclass(frozen=True)
class PulseAnnotation:
    """Compiler intent for one pulse, kept for audits and reporting.

    ``ordinal`` is 0 for the pi/2 pulse and counts pi pulses from 1.
    ``branch_before``/``branch_after`` hold the moving-branch configuration
    bits around the pulse (None when the annotation was read back from JSON,
    which stores only the exported schema).  ``resonant_detuning`` is the
    detuning of the moving branch (always 0 by construction) and
    ``ground_detuning`` that of the all-zeros branch.
    """

    ordinal: int
    target_spin: int
    resonant_detuning: float
    ground_detuning: float
    branch_before: int | None = None
    branch_after: int | None = None


@dataclass(frozen=True)
class PulseSequence:
    """An ordered pulse program over an n-spin chain, with annotations."""

    n: int
    pulses: tuple[Pulse, ...]
    annotations: tuple[PulseAnnotation, ...]

    def __post_init__(self):
        if len(self.pulses) != len(self.annotations):
            raise ValueError("pulses and annotations differ in length")

    def __len__(self) -> int:
        return len(self.pulses)

    @property
    def pi_count(self) -> int:
        return sum(1 for p in self.pulses if p.kind != "half_pi")

    def pi_frequencies(self) -> list[float]:
        return [p.omega for p in self.pulses if p.kind != "half_pi"]

    def to_dict(self) -> dict:
        """Exported schema: one record per pulse, floats untouched."""
        records = []
        for pulse, note in zip(self.pulses, self.annotations):
            records.append({
                "ordinal": note.ordinal,
                "kind": pulse.kind,
                "omega": pulse.omega,
                "rabi": pulse.rabi,
                "tau": pulse.tau,
                "target_spin": note.target_spin,
                "branch_detunings": {
                    "resonant": note.resonant_detuning,
                    "ground": note.ground_detuning,
                },
            })
        return {"n": self.n, "pulses": records}

    @classmethod
    def from_dict(cls, data: dict) -> "PulseSequence":
        pulses = []
        notes = []
        for rec in data["pulses"]:
            pulses.append(Pulse(
                omega=float(rec["omega"]),
                rabi=float(rec["rabi"]),
                tau=float(rec["tau"]),
                kind=rec["kind"],
            ))
            det = rec["branch_detunings"]
            notes.append(PulseAnnotation(
                ordinal=int(rec["ordinal"]),
                target_spin=int(rec["target_spin"]),
                resonant_detuning=float(det["resonant"]),
                ground_detuning=float(det["ground"]),
            ))
        return cls(n=int(data["n"]), pulses=tuple(pulses), annotations=tuple(notes))


class CompileError(ValueError):
    """The requested pulse program cannot be compiled."""


def _audit_pulse(pulse: Pulse, note: PulseAnnotation, moving_bits: int,
                 params: ChainParams) -> None:
    """Check compiled intent against the pair physics.  Raises on mismatch.

    The moving branch must be exactly resonant: its pulse frequency was
    computed from the same local-gap expression pair_detuning uses, so the
    detuning must be 0.0 bit-for-bit.  The ground branch must sit at the
    annotated detuning (2J or 4J; J for the pi/2 pulse's partner bookkeeping).
    """
    k = note.target_spin
    lower = BasisState(params.n, moving_bits & ~(1 << k))
    _, delta_moving = pair_detuning(lower, k, pulse, params)
    if delta_moving != 0.0:
        raise CompileError(
            f"pulse ordinal {note.ordinal}: moving branch off resonance by {delta_moving!r}"
        )
    _, delta_ground = pair_detuning(BasisState.zero(params.n), k, pulse, params)
    if abs(delta_ground - note.ground_detuning) > 1e-9 * max(1.0, abs(params.omega[k])):
        raise CompileError(
            f"pulse ordinal {note.ordinal}: ground branch detuning {delta_ground!r}, "
            f"annotated {note.ground_detuning!r}"
        )


def compile_cn_remote(params: ChainParams, rabi: float) -> PulseSequence:
    """Compile the controlled-NOT program between spins N-1 and 0.

    The returned sequence, applied to the ground state, produces the
    superposition (|00..0> + i^{L+1} |10..01>)/sqrt(2) up to off-resonant
    leakage.  Every pi pulse is exactly resonant for the moving branch;
    frequencies are derived by tracing that branch through the local
    resonance table rather than hard-coding the textbook list, and the
    result is audited pulse by pulse against pair_detuning.
    """
    n, j = params.n, params.j
    if n < 3:
        raise CompileError(f"need at least 3 spins, got {n}")
    if rabi <= 0:
        raise CompileError(f"rabi must be positive, got {rabi!r}")

    pulses: list[Pulse] = []
    notes: list[PulseAnnotation] = []
    moving = 0  # ground configuration; bits set as the excitation walks

    def emit(kind: str, spin: int, ordinal: int, ground_detuning: float) -> None:
        nonlocal moving
        freq = _excitation_gap_bits(moving, spin, params)
        if kind == "half_pi":
            pulse = Pulse.half_pi_pulse(freq, rabi)
        else:
            pulse = Pulse.pi_pulse(freq, rabi)
        after = moving ^ (1 << spin)
        note = PulseAnnotation(
            ordinal=ordinal,
            target_spin=spin,
            resonant_detuning=0.0,
            ground_detuning=ground_detuning,
            branch_before=moving,
            branch_after=after,
        )
        _audit_pulse(pulse, note, moving | (1 << spin), params)
        pulses.append(pulse)
        notes.append(note)
        moving = after

    # pi/2 on the control spin splits the ground state; both branches are
    # resonant here, so the "ground detuning" is 0 by definition.
    emit("half_pi", n - 1, 0, 0.0)

    ordinal = 1

    # first pi pulse: flip spin N-2 conditioned on the control being excited
    emit("pi", n - 2, ordinal, 2 * j)
    ordinal += 1

    # walk the excitation to spin 0, erasing the previous rung each time
    for spin in range(n - 3, -1, -1):
        emit("pi", spin, ordinal, 2 * j)
        ordinal += 1
        unflip = spin + 1
        # with both its neighbors excited, the first unflip sits 4J
        # below the ground branch's transition instead of 2J
        ground = 4 * j if unflip == n - 2 else 2 * j
        emit("pi", unflip, ordinal, ground)
        ordinal += 1

    if moving != (1 << (n - 1)) | 1:
        raise CompileError("moving branch did not end on the control+target configuration")
    seq = PulseSequence(n=n, pulses=tuple(pulses), annotations=tuple(notes))
    if seq.pi_count != 2 * n - 3:
        raise CompileError(f"compiled {seq.pi_count} pi pulses, expected {2 * n - 3}")
    return seq


@dataclass(frozen=True)
class DistortionSpec:
    """A block of pi pulses gets its Rabi frequency perturbed.

    ``k1``/``k2`` bound the affected pi-pulse ordinals, 1-based inclusive.
    ``fixed_offset`` adds epsilon0 to every pulse in the block;
    ``uniform_random`` adds an independent draw from [-epsilon0, epsilon0]
    per pulse, consumed in pulse order from a generator seeded with ``seed``.
    With ``refit_tau`` the duration is recomputed so the nominal rotation
    stays a pi pulse; otherwise tau is frozen and the rotation angle drifts.
    """

    mode: str
    k1: int
    k2: int
    epsilon0: float
    seed: int = 0
    refit_tau: bool = True

    def __post_init__(self):
        if self.mode not in DISTORTION_MODES:
            raise ValueError(f"mode must be one of {DISTORTION_MODES}, got {self.mode!r}")
        if not 1 <= self.k1 <= self.k2:
            raise ValueError(f"need 1 <= k1 <= k2, got k1={self.k1}, k2={self.k2}")
        if self.epsilon0 < 0:
            raise ValueError(f"epsilon0 must be >= 0, got {self.epsilon0!r}")


def distort(seq: PulseSequence, spec: DistortionSpec) -> PulseSequence:
    """Return a copy of ``seq`` with the spec's block of pi pulses perturbed."""
    l = seq.pi_count
    if spec.k2 > l:
        raise ValueError(f"distortion range [{spec.k1}, {spec.k2}] exceeds L={l}")

    rng = np.random.default_rng(spec.seed) if spec.mode == "uniform_random" else None
    new_pulses = []
    for pulse, note in zip(seq.pulses, seq.annotations):
        if pulse.kind == "half_pi" or not spec.k1 <= note.ordinal <= spec.k2:
            new_pulses.append(pulse)
            continue
        if rng is None:
            eps = spec.epsilon0
        else:
            eps = rng.uniform(-spec.epsilon0, spec.epsilon0)
        new_rabi = pulse.rabi + eps
        if new_rabi <= 0:
            raise ValueError(
                f"pulse ordinal {note.ordinal}: distorted rabi {new_rabi!r} is not positive"
            )
        if spec.refit_tau:
            new_pulses.append(replace(pulse, rabi=new_rabi, tau=math.pi / new_rabi))
        else:
            # frozen tau means the rotation angle is no longer pi
            new_pulses.append(replace(pulse, rabi=new_rabi, kind="custom"))
    return PulseSequence(n=seq.n, pulses=tuple(new_pulses), annotations=seq.annotations)

"""Sparse propagation of the chain state through rectangular rf pulses.

A pulse of frequency omega addresses exactly one spin k (the one whose
Larmor frequency is closest), because every other spin is detuned by at
least half the Larmor spacing.  Under that single-transition rule a pulse
couples each basis configuration s only to flip_k(s), so the full evolution
factorizes into independent 2x2 rotations, one per configuration pair.

For a pair (m, p) with q_k = 0 in m and q_k = 1 in p, detuning
Delta = E_p - E_m - omega and effective frequency Omega_e = sqrt(Omega^2 +
Delta^2), the interaction-picture propagator over a pulse of duration tau
starting at time t0 is

    C_m' = [cos(x) + i (Delta/Omega_e) sin(x)] e^{-i tau Delta / 2} C_m
           + i (Omega/Omega_e) sin(x) e^{-i t0 Delta - i tau Delta / 2} C_p
    C_p' = i (Omega/Omega_e) sin(x) e^{+i t0 Delta + i tau Delta / 2} C_m
           + [cos(x) - i (Delta/Omega_e) sin(x)] e^{+i tau Delta / 2} C_p

with x = Omega_e tau / 2.  On resonance this is the plain Rabi rotation; at
Omega_e tau = 2 pi k the off-diagonal terms vanish, which is the
"2 pi k" trick that keeps a pi-pulse from disturbing detuned configurations.

The state is a sparse map {configuration bits -> amplitude}.  After each
pulse, amplitudes whose probability fell below the prune threshold are
dropped into a cumulative ``pruned_mass`` so the probability account always
closes.  Configurations are logged the first time they cross the threshold,
giving the generation order used by the unwanted-state analysis.
"""

from __future__ import annotations

import cmath
import math
from bisect import bisect_left
from dataclasses import dataclass, field

from .chain import BasisState, ChainParams, _excitation_gap_bits

#: Default prune threshold on normalized probabilities.  Matches a 1e-6
#: cutoff in the doubled convention used for reporting.
PRUNE_THRESHOLD = 5e-7

#: Allowed drift of the probability account across one pulse, before pruning.
NORM_DRIFT_LIMIT = 1e-9

_ANGLE_TOL = 1e-12


class AddressingError(ValueError):
    """Pulse frequency does not single out one spin."""


class NumericalIntegrityError(RuntimeError):
    """Probability bookkeeping drifted beyond the allowed tolerance."""


@dataclass(frozen=True)
class Pulse:
    """One rectangular rf pulse: frequency, Rabi frequency, duration."""

    omega: float
    rabi: float
    tau: float
    kind: str = "custom"

    def __post_init__(self):
        if self.rabi <= 0:
            raise ValueError("rabi must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.kind not in ("pi", "half_pi", "custom"):
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        angle = self.rabi * self.tau
        if self.kind == "pi" and abs(angle - math.pi) > _ANGLE_TOL:
            raise ValueError(f"pi pulse has rabi*tau = {angle!r}")
        if self.kind == "half_pi" and abs(angle - math.pi / 2) > _ANGLE_TOL:
            raise ValueError(f"half_pi pulse has rabi*tau = {angle!r}")

    @classmethod
    def pi_pulse(cls, omega: float, rabi: float) -> "Pulse":
        return cls(omega=omega, rabi=rabi, tau=math.pi / rabi, kind="pi")

    @classmethod
    def half_pi_pulse(cls, omega: float, rabi: float) -> "Pulse":
        return cls(omega=omega, rabi=rabi, tau=math.pi / (2 * rabi), kind="half_pi")


@dataclass(frozen=True)
class PairPropagator:
    """Exact 2x2 propagator for one configuration pair, taken at t0 = 0.

    ``a_mm .. a_pp`` map (C_m, C_p) at pulse start to pulse end for a pulse
    beginning at t0 = 0; for a later start the off-diagonal entries pick up
    the phases e^{-+ i t0 Delta} (see :func:`two_level_step`).  The matrix is
    unitary for every (Delta, Omega, tau).
    """

    a_mm: complex
    a_mp: complex
    a_pm: complex
    a_pp: complex
    delta: float
    omega_e: float

    @classmethod
    def for_pair(cls, delta: float, rabi: float, tau: float) -> "PairPropagator":
        omega_e = math.hypot(rabi, delta)
        half = 0.5 * omega_e * tau
        c, s = math.cos(half), math.sin(half)
        ratio_d = delta / omega_e
        ratio_r = rabi / omega_e
        edge = cmath.exp(-0.5j * tau * delta)
        diag_m = complex(c, ratio_d * s) * edge
        diag_p = complex(c, -ratio_d * s) * edge.conjugate()
        cross = 1j * ratio_r * s
        return cls(
            a_mm=diag_m,
            a_mp=cross * edge,
            a_pm=cross * edge.conjugate(),
            a_pp=diag_p,
            delta=delta,
            omega_e=omega_e,
        )

    def matrix_at(self, t0: float) -> tuple[complex, complex, complex, complex]:
        """Full matrix entries for a pulse starting at time t0."""
        ph = cmath.exp(1j * t0 * self.delta)
        return self.a_mm, self.a_mp / ph, self.a_pm * ph, self.a_pp


def two_level_step(c_m: complex, c_p: complex, prop: PairPropagator,
                   t0: float) -> tuple[complex, complex]:
    """Advance one pair of amplitudes through a pulse starting at t0."""
    m_mm, m_mp, m_pm, m_pp = prop.matrix_at(t0)
    return m_mm * c_m + m_mp * c_p, m_pm * c_m + m_pp * c_p


def target_spin(pulse: Pulse, params: ChainParams) -> int:
    """Spin addressed by the pulse: the unique k minimizing |omega - omega_k|.

    The winner must sit within delta_omega/4 of the pulse, which guarantees
    every other spin is detuned by at least delta_omega/2.
    """
    omega = params.omega
    i = bisect_left(omega, pulse.omega)
    candidates = [k for k in (i - 1, i) if 0 <= k < params.n]
    best = min(candidates, key=lambda k: abs(pulse.omega - omega[k]))
    dist = abs(pulse.omega - omega[best])
    for k in candidates:
        if k != best and abs(pulse.omega - omega[k]) == dist:
            raise AddressingError(
                f"pulse at omega={pulse.omega!r} is equidistant from spins {best} and {k}"
            )
    if dist > params.delta_omega / 4:
        raise AddressingError(
            f"pulse at omega={pulse.omega!r} is {dist:g} away from the nearest "
            f"Larmor frequency (limit delta_omega/4 = {params.delta_omega / 4:g})"
        )
    return best


def pair_detuning(lower: BasisState, k: int, pulse: Pulse,
                  params: ChainParams) -> tuple[BasisState, float]:
    """Partner state and detuning Delta = E_upper - E_lower - omega.

    ``lower`` must be the lower-energy member of the pair: flipping spin k
    has to raise the energy.
    """
    gap = _excitation_gap_bits(lower.bits, k, params)
    if lower.bit(k) == 1:
        gap = -gap
    if gap == 0.0:
        raise NumericalIntegrityError(f"degenerate pair at spin {k}")
    if gap < 0.0:
        raise ValueError(f"flipping spin {k} lowers the energy; pair is misoriented")
    return lower.flip(k), gap - pulse.omega


@dataclass
class TraceRow:
    """Per-pulse record of the run: what was applied is and what survives it."""

    pulse_index: int
    omega: float
    rabi: float
    tau: float
    tracked_states: int
    norm: float
    pruned_mass: float


@dataclass
class SparseState:
    """Sparse superposition: interaction-picture amplitudes by configuration.

    ``amps`` maps configuration bits to the complex amplitude C_p; ``t`` is
    the accumulated pulse time; ``pruned_mass`` the total probability removed
    by pruning, so sum(|C|^2) + pruned_mass stays 1 for a normalized run.
    ``gen_log`` records (bits, pulse ordinal) the first time a configuration
    is tracked; the initial configurations carry ordinal -1.
    """

    n: int
    amps: dict[int, complex]
    t: float = 0.0
    pruned_mass: float = 0.0
    pulses_applied: int = 0
    gen_log: list[tuple[int, int]] = field(default_factory=list)
    _logged: set[int] = field(default_factory=set, repr=False)

    @classmethod
    def ground(cls, n: int) -> "SparseState":
        return cls.from_amplitudes(n, {0: 1.0 + 0.0j})

    @classmethod
    def from_basis(cls, state: BasisState) -> "SparseState":
        return cls.from_amplitudes(state.n, {state.bits: 1.0 + 0.0j})

    @classmethod
    def from_amplitudes(cls, n: int, amps: dict) -> "SparseState":
        clean: dict[int, complex] = {}
        for key, value in amps.items():
            bits = key.bits if isinstance(key, BasisState) else int(key)
            clean[bits] = complex(value)
        order = sorted(clean)
        return cls(
            n=n,
            amps={b: clean[b] for b in order},
            gen_log=[(b, -1) for b in order],
            _logged=set(order),
        )

    def amplitude(self, state: BasisState | int) -> complex:
        bits = state.bits if isinstance(state, BasisState) else state
        return self.amps.get(bits, 0.0 + 0.0j)

    def probability(self, state: BasisState | int) -> float:
        return abs(self.amplitude(state)) ** 2

    def norm_sq(self) -> float:
        return sum(c.real * c.real + c.imag * c.imag for c in self.amps.values())

    @property
    def tracked_count(self) -> int:
        return len(self.amps)

    def states(self) -> list[BasisState]:
        return [BasisState(self.n, bits) for bits in self.amps]

    def copy(self) -> "SparseState":
        return SparseState(
            n=self.n,
            amps=dict(self.amps),
            t=self.t,
            pruned_mass=self.pruned_mass,
            pulses_applied=self.pulses_applied,
            gen_log=list(self.gen_log),
            _logged=set(self._logged),
        )


def _pulse_matrices(state_t: float, pulse: Pulse, k: int, params: ChainParams):
    """Full 2x2 matrices for every neighbor pattern of spin k, t0 folded in.

    The detuning of a pair depends only on the orientations of the spins
    adjacent to k: Delta = (omega_k - omega) + J * (sigma_{k-1} + sigma_{k+1}).
    The pattern index packs the neighbor bits (low bit = left neighbor k-1
    where present), so at most four distinct matrices exist per pulse.
    """
    base = params.omega[k] - pulse.omega
    j = params.j
    n = params.n
    patterns = {}
    if 0 < k < n - 1:
        for pat in range(4):
            sig = (1 - 2 * (pat & 1)) + (1 - 2 * (pat >> 1))
            patterns[pat] = base + j * sig
    else:
        for pat in range(2):
            patterns[pat] = base + j * (1 - 2 * pat)
    mats = {}
    for pat, delta in patterns.items():
        prop = PairPropagator.for_pair(delta, pulse.rabi, pulse.tau)
        mats[pat] = prop.matrix_at(state_t)
    return mats


def _apply_pulse_inplace(state: SparseState, pulse: Pulse, params: ChainParams,
                         prune_threshold: float) -> float:
    """Advance ``state`` through one pulse.  Returns the surviving norm."""
    k = target_spin(pulse, params)
    mats = _pulse_matrices(state.t, pulse, k, params)
    n = params.n
    mask = 1 << k
    keep = ~mask

    amps = state.amps
    norm_before = sum(c.real * c.real + c.imag * c.imag for c in amps.values())

    new: dict[int, complex] = {}
    fresh: list[int] = []
    logged = state._logged
    kept_norm = 0.0
    pruned = 0.0
    done: set[int] = set()
    get = amps.get
    zero = 0.0 + 0.0j

    if 0 < k < n - 1:
        def pattern(m):
            return ((m >> (k - 1)) & 1) | (((m >> (k + 1)) & 1) << 1)
    elif k == 0:
        def pattern(m):
            return (m >> 1) & 1
    else:
        def pattern(m):
            return (m >> (k - 1)) & 1

    for s in amps:
        m = s & keep
        if m in done:
            continue
        done.add(m)
        p = m | mask
        c_m = get(m, zero)
        c_p = get(p, zero)
        m_mm, m_mp, m_pm, m_pp = mats[pattern(m)]
        out_m = m_mm * c_m + m_mp * c_p
        out_p = m_pm * c_m + m_pp * c_p

        q = out_m.real * out_m.real + out_m.imag * out_m.imag
        if q >= prune_threshold:
            kept_norm += q
            new[m] = out_m
            if m not in logged:
                fresh.append(m)
        else:
            pruned += q
        q = out_p.real * out_p.real + out_p.imag * out_p.imag
        if q >= prune_threshold:
            kept_norm += q
            new[p] = out_p
            if p not in logged:
                fresh.append(p)
        else:
            pruned += q

    drift = abs((kept_norm + pruned) - norm_before)
    if drift > NORM_DRIFT_LIMIT:
        raise NumericalIntegrityError(
            f"norm drifted by {drift:.3e} during pulse {state.pulses_applied}"
        )

    ordinal = state.pulses_applied
    fresh.sort()
    for bits in fresh:
        state.gen_log.append((bits, ordinal))
        logged.add(bits)

    state.amps = new
    state.t += pulse.tau
    state.pruned_mass += pruned
    state.pulses_applied += 1
    return kept_norm


def apply_pulse(state: SparseState, pulse: Pulse, params: ChainParams,
                prune_threshold: float = PRUNE_THRESHOLD) -> SparseState:
    """Evolve a copy of ``state`` through one pulse and return it.

    Pairs are disjoint, so the per-pair rotations commute and the result does
    not depend on processing order; this implementation runs them
    sequentially.
    """
    if state.n != params.n:
        raise ValueError(f"state has {state.n} spins, params expect {params.n}")
    out = state.copy()
    _apply_pulse_inplace(out, pulse, params, prune_threshold)
    return out


def run_sequence(initial: SparseState, pulses, params: ChainParams,
                 prune_threshold: float = PRUNE_THRESHOLD,
                 ) -> tuple[SparseState, list[TraceRow]]:
    """Fold apply_pulse over a pulse list, collecting a per-pulse trace."""
    pulses = list(pulses)
    if not pulses:
        raise ValueError("pulse list is empty")
    if initial.n != params.n:
        raise ValueError(f"state has {initial.n} spins, params expect {params.n}")
    state = initial.copy()
    trace: list[TraceRow] = []
    for i, pulse in enumerate(pulses):
        try:
            norm = _apply_pulse_inplace(state, pulse, params, prune_threshold)
        except (AddressingError, NumericalIntegrityError) as exc:
            raise type(exc)(f"pulse {i}: {exc}") from exc
        trace.append(TraceRow(
            pulse_index=i,
            omega=pulse.omega,
            rabi=pulse.rabi,
            tau=pulse.tau,
            tracked_states=len(state.amps),
            norm=norm,
            pruned_mass=state.pruned_mass,
        ))
    return state, trace

"""Spin-chain model: basis configurations, energies, and resonant frequencies.

The chain is N spin-1/2 nuclei in a graded field: spin k precesses at the
Larmor frequency omega_k, and nearest neighbors are coupled by a diagonal
Ising term -2J I^z_k I^z_{k+1}.  Everything downstream works in dimensionless
units: J = 1 fixes the frequency unit, times are measured in 1/J, hbar = 1.

|0> denotes a spin aligned with the external field (I^z eigenvalue +1/2), so
the all-zeros configuration is the chain ground state.  A configuration is
stored as a plain integer whose bit k holds q_k; bit 0 is the right/target
end of the chain, bit N-1 the left/control end.

With sigma_k = 1 - 2 q_k (so sigma = +1 for |0>), the diagonal energy of a
configuration is

    E = -1/2 sum_k omega_k sigma_k  -  (J/2) sum_k sigma_k sigma_{k+1}.

Flipping one spin changes E by sigma_k * (omega_k + J * (sigma_{k-1} + sigma_{k+1})),
which is where the 3N-2 resonant frequencies come from: omega_k +/- J at the
chain ends, and omega_k, omega_k +/- 2J for inner spins, selected by the
orientation of the two neighbors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

MAGIC_ANGLE_COS = 1.0 / math.sqrt(3.0)

# delta_omega / J below this, neighbor transitions are no longer cleanly
# separable and the one-transition-per-pulse picture degrades.
MIN_SAFE_SPACING = 20.0


class ApproximationWarning(UserWarning):
    """Parameters leave the regime where the single-transition model is valid."""


@dataclass(frozen=True)
class BasisState:
    """One basis configuration |q_{N-1} ... q_1 q_0> of an N-spin chain.

    ``bits`` packs the configuration with bit k = q_k.  Instances are
    immutable and hashable so they can key amplitude maps directly.
    """

    n: int
    bits: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"chain length must be >= 1, got {self.n}")
        if not 0 <= self.bits < (1 << self.n):
            raise ValueError(f"bits 0x{self.bits:x} out of range for n={self.n}")

    @classmethod
    def zero(cls, n: int) -> "BasisState":
        return cls(n, 0)

    @classmethod
    def from_ones(cls, n: int, ones) -> "BasisState":
        bits = 0
        for k in ones:
            bits |= 1 << k
        return cls(n, bits)

    @classmethod
    def from_hex(cls, n: int, text: str) -> "BasisState":
        return cls(n, int(text, 16))

    def bit(self, k: int) -> int:
        self._check_index(k)
        return (self.bits >> k) & 1

    def flip(self, k: int) -> "BasisState":
        """Toggle spin k.  Involution: s.flip(k).flip(k) == s."""
        self._check_index(k)
        return BasisState(self.n, self.bits ^ (1 << k))

    def ones(self) -> list[int]:
        """Positions of excited spins, highest index first."""
        return [k for k in range(self.n - 1, -1, -1) if (self.bits >> k) & 1]

    @property
    def excitation_count(self) -> int:
        return bin(self.bits).count("1")

    def to_hex(self) -> str:
        """Canonical form: lowercase hex, ceil(n/4) digits, q_0 least significant."""
        width = (self.n + 3) // 4
        return format(self.bits, f"0{width}x")

    def _check_index(self, k: int) -> None:
        if not 0 <= k < self.n:
            raise IndexError(f"spin index {k} out of range for n={self.n}")

    def __str__(self) -> str:
        return f"N={self.n}; ones=[{','.join(map(str, self.ones()))}]"


@dataclass(frozen=True)
class ChainParams:
    """Dimensionless chain model: Larmor ladder omega_k and Ising constant J.

    ``omega`` is stored as an explicit array so non-uniform field profiles
    can be injected; the default constructor builds the uniform ladder
    omega_k = omega0 + k * delta_omega.  All observable results are invariant
    under a common shift of every omega_k (together with pulse frequencies),
    so omega0 is a gauge choice.
    """

    n: int
    j: float
    omega: tuple[float, ...]
    delta_omega: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 spins, got n={self.n}")
        if len(self.omega) != self.n:
            raise ValueError(f"omega has {len(self.omega)} entries for n={self.n}")
        if self.delta_omega <= 0:
            raise ValueError("delta_omega must be positive")
        if self.j <= 0:
            raise ValueError("j must be positive")
        if any(b <= a for a, b in zip(self.omega, self.omega[1:])):
            raise ValueError("omega must be strictly increasing with spin index")
        # with omega_0 > 2J every single-spin excitation costs energy no
        # matter the neighbors, which fixes the orientation of every
        # configuration pair; the whole propagation layer relies on it
        if self.omega[0] <= 2 * self.j:
            raise ValueError(
                f"omega_0 = {self.omega[0]!r} must exceed 2J = {2 * self.j!r}"
            )
        if self.delta_omega / self.j < MIN_SAFE_SPACING:
            warnings.warn(
                f"delta_omega/J = {self.delta_omega / self.j:.3g} < {MIN_SAFE_SPACING:g}: "
                "neighbor transitions are poorly separated and the one-transition-"
                "per-pulse approximation degrades",
                ApproximationWarning,
                stacklevel=2,
            )

    @classmethod
    def uniform(cls, n: int, delta_omega: float = 100.0, j: float = 1.0,
                omega0: float | None = None) -> "ChainParams":
        """Uniformly graded chain; omega0 defaults to delta_omega."""
        if omega0 is None:
            omega0 = delta_omega
        omega = tuple(omega0 + k * delta_omega for k in range(n))
        return cls(n=n, j=j, omega=omega, delta_omega=delta_omega)

    def ground_state(self) -> BasisState:
        return BasisState.zero(self.n)


@dataclass(frozen=True)
class LabParams:
    """Laboratory-frame NMR parameters, converted to chain units on demand.

    Frequencies are plain Hz (f0 the base NMR frequency, delta_f the
    neighbor-to-neighbor difference, j_hz = J/2pi); the 2pi factors cancel
    in the conversion, so omega_k / J = (f0 + k delta_f) / j_hz.
    """

    f0: float
    delta_f: float
    j_hz: float
    theta: float = math.acos(MAGIC_ANGLE_COS)
    gamma: float = 0.0
    b0: float = 0.0

    def __post_init__(self):
        if self.delta_f <= 0:
            raise ValueError("delta_f must be positive")
        if self.j_hz <= 0:
            raise ValueError("j_hz must be positive")

    def to_chain(self, n: int) -> ChainParams:
        delta_omega = self.delta_f / self.j_hz
        omega = tuple((self.f0 + k * self.delta_f) / self.j_hz for k in range(n))
        return ChainParams(n=n, j=1.0, omega=omega, delta_omega=delta_omega)


@dataclass(frozen=True)
class DipoleContext:
    """Geometry and moments for the secular dipolar field along the chain."""

    positions: tuple[float, ...]
    moments: tuple[float, ...]
    theta: float

    def __post_init__(self):
        if len(self.positions) != len(self.moments):
            raise ValueError("positions and moments must have equal length")


def _sigma(bits: int, k: int) -> int:
    """Pauli-z eigenvalue 1 - 2 q_k of spin k."""
    return 1 - 2 * ((bits >> k) & 1)


def _neighbor_sigma_sum(bits: int, k: int, n: int) -> int:
    """sigma_{k-1} + sigma_{k+1}, with missing neighbors dropped at the ends."""
    s = 0
    if k > 0:
        s += 1 - 2 * ((bits >> (k - 1)) & 1)
    if k < n - 1:
        s += 1 - 2 * ((bits >> (k + 1)) & 1)
    return s


def _excitation_gap_bits(bits: int, k: int, params: ChainParams) -> float:
    """E(q_k = 1) - E(q_k = 0) with all other spins as in ``bits``.

    Independent of q_k itself; computed from the local field rather than as
    a difference of total energies so it stays exact under a common shift of
    all frequencies (no cancellation of large Zeeman sums).
    """
    return params.omega[k] + params.j * _neighbor_sigma_sum(bits, k, params.n)


def energy(state: BasisState, params: ChainParams) -> float:
    """Diagonal energy of a basis configuration, in units of J."""
    if state.n != params.n:
        raise ValueError(f"state has {state.n} spins, params expect {params.n}")
    bits = state.bits
    e = 0.0
    for k in range(params.n):
        e -= 0.5 * params.omega[k] * _sigma(bits, k)
    for k in range(params.n - 1):
        e -= 0.5 * params.j * _sigma(bits, k) * _sigma(bits, k + 1)
    return e


def flip(state: BasisState, k: int) -> BasisState:
    """Toggle spin k of a configuration."""
    return state.flip(k)


def excitation_gap(state: BasisState, k: int, params: ChainParams) -> float:
    """Signed energy cost of exciting spin k given its neighbors in ``state``.

    Positive whenever omega_k > 2J, i.e. in any physically sensible chain.
    """
    if state.n != params.n:
        raise ValueError(f"state has {state.n} spins, params expect {params.n}")
    state._check_index(k)
    return _excitation_gap_bits(state.bits, k, params)


def transition_frequency(state: BasisState, k: int, params: ChainParams) -> float:
    """|E(flip_k(state)) - E(state)|: the resonance frequency of spin k."""
    return abs(excitation_gap(state, k, params))


def resonant_frequency_set(params: ChainParams) -> list[float]:
    """All 3N-2 single-spin resonance frequencies of the chain, sorted.

    Edge spins contribute omega_k +/- J, inner spins omega_k and
    omega_k +/- 2J.  Values are distinct whenever delta_omega > 4J.
    """
    n, j = params.n, params.j
    freqs = {params.omega[0] + j, params.omega[0] - j,
             params.omega[n - 1] + j, params.omega[n - 1] - j}
    for k in range(1, n - 1):
        freqs.add(params.omega[k])
        freqs.add(params.omega[k] + 2 * j)
        freqs.add(params.omega[k] - 2 * j)
    return sorted(freqs)


def dipole_z_field(ctx: DipoleContext, j: int) -> float:
    """z-component of the dipolar field at nucleus j.

    Sum over k != j of (3 cos^2 theta - 1) / r_kj^3 * mu_kz.  Vanishes at the
    magic angle cos(theta) = 1/sqrt(3) regardless of moments and spacing.
    """
    if not 0 <= j < len(ctx.positions):
        raise IndexError(f"nucleus index {j} out of range")
    geom = 3.0 * math.cos(ctx.theta) ** 2 - 1.0
    field = 0.0
    for k, (pos, mu) in enumerate(zip(ctx.positions, ctx.moments)):
        if k == j:
            continue
        r = abs(pos - ctx.positions[j])
        if r == 0.0:
            raise ValueError(f"nuclei {k} and {j} are coincident")
        field += geom / r**3 * mu
    return field

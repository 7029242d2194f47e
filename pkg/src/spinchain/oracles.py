"""Independent references the sparse engine is checked against.

Three layers, in increasing cost:

- closed forms: the single-pulse leakage probability ``epsilon``, its
  first-order accumulation ``perturbative_c0``, the ground-branch phase
  product ``ground_branch_product``, and the all-2pik final state
  ``analytic_final_state``;
- ``dense_restricted_reference``: the engine's own pairwise two-level
  physics replayed over a full 2^N vector with no pruning, to isolate
  pruning and sparse-bookkeeping errors from model error;
- ``dense_reference``: the unrestricted model with every single-flip
  matrix element kept, propagated exactly per pulse in the frame rotating
  at the pulse frequency; ``dense_reference_ode`` integrates the same
  model as an explicitly time-dependent system with an adaptive stepper,
  as a cross-check that owes nothing to the frame algebra.

All dense paths work on interaction-picture amplitudes indexed by
configuration bits, the same convention as SparseState, so results diff
directly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .chain import BasisState, ChainParams, energy
from .engine import PairPropagator, Pulse, target_spin
from .sequence import PulseSequence

#: Largest chain the dense oracles accept; 2^12 amplitudes keeps the
#: eigendecompositions comfortably in memory and under a second per pulse.
DENSE_CAP = 12


class DenseCapError(ValueError):
    """Chain too large for a dense 2^N treatment."""


# ---------------------------------------------------------------------------
# closed forms

def epsilon(rabi: float, delta: float, tau: float) -> float:
    """Probability that one off-resonant pulse flips its detuned pair.

    epsilon = (Omega/Omega_e)^2 sin^2(Omega_e tau / 2).  Zero exactly at
    the 2 pi k points, 1 for a resonant pi pulse.
    """
    if rabi <= 0 or tau <= 0:
        raise ValueError("rabi and tau must be positive")
    omega_e = math.hypot(rabi, delta)
    s = math.sin(0.5 * omega_e * tau)
    r = rabi / omega_e
    return r * r * s * s


def perturbative_c0(per_pulse_eps) -> float:
    """First-order surviving ground probability, 1 - sum of leakages."""
    eps = list(per_pulse_eps)
    for e in eps:
        if not 0.0 <= e <= 1.0:
            raise ValueError(f"epsilon {e!r} outside [0, 1]")
    return 1.0 - sum(eps)


def sequence_epsilons(seq: PulseSequence) -> list[float]:
    """Ground-branch leakage budget, one epsilon per pi pulse."""
    out = []
    for pulse, note in zip(seq.pulses, seq.annotations):
        if pulse.kind == "half_pi":
            continue
        out.append(epsilon(pulse.rabi, note.ground_detuning, pulse.tau))
    return out


def ground_branch_factor(rabi: float, delta: float, tau: float) -> complex:
    """Amplitude the stationary branch keeps through one detuned pulse.

    The diagonal element of the two-level propagator for the lower state:
    [cos(x) + i (Delta/Omega_e) sin(x)] e^{-i tau Delta / 2}, x = Omega_e
    tau / 2.  Start-time phases cancel on the diagonal, so the factor is
    pulse-order independent.
    """
    omega_e = math.hypot(rabi, delta)
    x = 0.5 * omega_e * tau
    core = complex(math.cos(x), (delta / omega_e) * math.sin(x))
    return core * cmath.exp(-0.5j * tau * delta)


def ground_branch_product(seq: PulseSequence) -> complex:
    """Predicted ground amplitude after the pi train (pi/2 pulse excluded).

    Multiplies the annotated ground-branch detuning factors across all pi
    pulses.  In the doubled convention this is directly comparable to
    sqrt(2) times the engine's final ground amplitude.
    """
    total = 1.0 + 0.0j
    for pulse, note in zip(seq.pulses, seq.annotations):
        if pulse.kind == "half_pi":
            continue
        total *= ground_branch_factor(pulse.rabi, note.ground_detuning, pulse.tau)
    return total


@dataclass(frozen=True)
class AnalyticFinal:
    """Final end-state pair amplitudes when every pi pulse is a 2 pi k pulse.

    Unnormalized two-state convention: |c0| = |c1| = 1, the pi/2 pulse's
    1/sqrt(2) is dropped.
    """

    c0: complex
    c1: complex
    k: int
    pulses: int


def analytic_final_state(k: int, pulses: int) -> AnalyticFinal:
    """Closed-form C_0, C_1 for a train of L pi pulses all at one 2 pi k point.

    Each detuned pulse contributes (-1)^k e^{-i pi sqrt(4k^2-1)/2} to the
    ground amplitude, so C_0 = (-1)^{kL} e^{-i pi L sqrt(4k^2-1)/2}; the
    moving branch accumulates i^L and the convention fixes C_1 = -1.  For
    k = 1 the ground phase per pulse is pi (1 - sqrt(3)/2), about 24 degrees.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if pulses < 1:
        raise ValueError(f"need at least one pulse, got {pulses}")
    root = math.sqrt(4.0 * k * k - 1.0)
    sign = -1.0 if (k * pulses) % 2 else 1.0
    c0 = sign * cmath.exp(-0.5j * math.pi * pulses * root)
    return AnalyticFinal(c0=c0, c1=-1.0 + 0.0j, k=k, pulses=pulses)


# ---------------------------------------------------------------------------
# dense models

def _order_check(params: ChainParams, n_expected: int) -> None:
    if params.n != n_expected:
        raise ValueError(f"params are for {params.n} spins, state for {n_expected}")
    if params.n > DENSE_CAP:
        raise DenseCapError(
            f"dense oracle capped at {DENSE_CAP} spins, got {params.n}"
        )


class DenseModel:
    """Precomputed 2^N machinery shared by the dense oracles.

    ``energies[p]`` is the chain energy of configuration p; ``flips[k]`` is
    the index permutation p -> p XOR (1 << k).  The single-flip coupling is
    -Omega/2 between every pair of configurations one flip apart, with no
    nearest-frequency restriction.
    """

    def __init__(self, params: ChainParams):
        if params.n > DENSE_CAP:
            raise DenseCapError(
                f"dense oracle capped at {DENSE_CAP} spins, got {params.n}"
            )
        self.params = params
        n = params.n
        dim = 1 << n
        self.dim = dim
        idx = np.arange(dim)
        self.energies = np.array(
            [energy(BasisState(n, int(p)), params) for p in range(dim)]
        )
        self.excitations = np.array([int(p).bit_count() for p in range(dim)])
        self.flips = [idx ^ (1 << k) for k in range(n)]

    def initial_vector(self, initial: BasisState) -> np.ndarray:
        if initial.n != self.params.n:
            raise ValueError("initial state size mismatch")
        c = np.zeros(self.dim, dtype=complex)
        c[initial.bits] = 1.0
        return c


def _sequence_pulses(seq) -> list[Pulse]:
    if isinstance(seq, PulseSequence):
        return list(seq.pulses)
    return list(seq)


def dense_reference(params: ChainParams, seq, initial: BasisState,
                    model: DenseModel | None = None) -> np.ndarray:
    """Exact propagation keeping all single-flip couplings.

    During a pulse of frequency omega, amplitudes in the frame
    D_p = C_p e^{i (E_p - omega x_p) t} (x_p = excitation count) obey a
    time-independent Hamiltonian H = diag(E_p - omega x_p) - (Omega/2) A,
    with A the one-flip adjacency.  Each pulse is advanced by
    eigendecomposition of that real symmetric H; interaction-picture
    amplitudes are recovered by undoing the frame at the pulse edges.
    Returns the full 2^N interaction-picture amplitude vector.
    """
    _order_check(params, initial.n)
    if model is None:
        model = DenseModel(params)
    pulses = _sequence_pulses(seq)
    c = model.initial_vector(initial)
    if not pulses:
        return c
    adj = np.zeros((model.dim, model.dim))
    for k in range(params.n):
        adj[np.arange(model.dim), model.flips[k]] = 1.0
    t = 0.0
    for pulse in pulses:
        frame = model.energies - pulse.omega * model.excitations
        h = -0.5 * pulse.rabi * adj
        h[np.diag_indices_from(h)] = frame
        vals, vecs = np.linalg.eigh(h)
        d = np.exp(-1j * frame * t) * c
        d = vecs @ (np.exp(-1j * vals * pulse.tau) * (vecs.T @ d))
        t += pulse.tau
        c = np.exp(1j * frame * t) * d
    return c


def dense_reference_ode(params: ChainParams, seq, initial: BasisState,
                        rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Direct adaptive integration of the amplitude equations of motion.

    i dC_p/dt = sum over single-flip partners m of -(Omega/2)
    e^{i s (|E_p - E_m| - omega) t} C_m, with s the sign of E_p - E_m.
    Shares nothing with dense_reference beyond the energy table; used to
    cross-check the rotating-frame algebra.  Slow; keep N tiny.
    """
    _order_check(params, initial.n)
    model = DenseModel(params)
    pulses = _sequence_pulses(seq)
    c = model.initial_vector(initial)
    n = params.n
    # de[k][p] = E_p - E_partner; the kept rotating term for C_p feeding
    # from that partner oscillates at sign(de) * (|de| - omega)
    de = [model.energies - model.energies[model.flips[k]] for k in range(n)]
    t = 0.0
    for pulse in pulses:
        rates = [np.sign(d) * (np.abs(d) - pulse.omega) for d in de]
        half = 0.5 * pulse.rabi

        def rhs(time, y):
            out = np.zeros_like(y)
            for k in range(n):
                out += np.exp(1j * rates[k] * time) * y[model.flips[k]]
            return 1j * half * out

        sol = solve_ivp(rhs, (t, t + pulse.tau), c, method="DOP853",
                        rtol=rtol, atol=atol, dense_output=False)
        if not sol.success:
            raise RuntimeError(f"integration failed: {sol.message}")
        c = sol.y[:, -1]
        t += pulse.tau
    return c


def dense_restricted_reference(params: ChainParams, seq,
                               initial: BasisState) -> np.ndarray:
    """Pairwise two-level physics over the full 2^N vector, no pruning.

    Identical equations to the sparse engine: each pulse addresses one spin
    and rotates every configuration pair with the exact two-level propagator
    for its neighbor-pattern detuning.  Dense array layout, so sparse
    traversal and pruning are taken out of the comparison.
    """
    _order_check(params, initial.n)
    pulses = _sequence_pulses(seq)
    n = params.n
    dim = 1 << n
    c = np.zeros(dim, dtype=complex)
    c[initial.bits] = 1.0
    idx = np.arange(dim)
    t = 0.0
    for pulse in pulses:
        k = target_spin(pulse, params)
        mask = 1 << k
        lowers = idx[(idx & mask) == 0]
        uppers = lowers | mask
        if 0 < k < n - 1:
            pattern = ((lowers >> (k - 1)) & 1) | (((lowers >> (k + 1)) & 1) << 1)
            sigma = (1 - 2 * (pattern & 1)) + (1 - 2 * (pattern >> 1))
            npat = 4
        elif k == 0:
            pattern = (lowers >> 1) & 1
            sigma = 1 - 2 * pattern
            npat = 2
        else:
            pattern = (lowers >> (k - 1)) & 1
            sigma = 1 - 2 * pattern
            npat = 2
        base = params.omega[k] - pulse.omega
        for pat in range(npat):
            sel = pattern == pat
            if not sel.any():
                continue
            delta = base + params.j * int(sigma[sel][0])
            prop = PairPropagator.for_pair(delta, pulse.rabi, pulse.tau)
            mm, mp, pm, pp = prop.matrix_at(t)
            lo, up = lowers[sel], uppers[sel]
            c_lo = c[lo].copy()
            c_up = c[up].copy()
            c[lo] = mm * c_lo + mp * c_up
            c[up] = pm * c_lo + pp * c_up
        t += pulse.tau
    return c


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance between two probability vectors."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def probabilities(vector: np.ndarray) -> np.ndarray:
    return np.abs(np.asarray(vector)) ** 2

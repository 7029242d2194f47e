"""Final-state census, probability band structure, and parameter sweeps.

A finished entangling run leaves almost all probability on the two desired
configurations (the ground state and the control+target excitation); the
rest leaks into "unwanted" configurations.  This module separates the two,
lists the unwanted states in the order the engine first tracked them,
clusters their probabilities into bands on a log scale, and drives the
sweep experiments that map leakage against Rabi frequency and against
deliberately distorted pulse blocks.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass

from .chain import BasisState, ChainParams
from .config import RunConfig
from .engine import SparseState, run_sequence
from .sequence import DistortionSpec, compile_cn_remote, distort


@dataclass(frozen=True)
class UnwantedRecord:
    """One leaked configuration in the final state.

    ``probability`` is normalized; ``generation_index`` is the position in
    the engine's first-tracked log (0 is the initial configuration), and
    ``first_pulse`` the pulse ordinal that created it.
    """

    state: BasisState
    probability: float
    generation_index: int
    first_pulse: int
    excitation_count: int


@dataclass(frozen=True)
class RunReport:
    """Census of a finished run.  All stored probabilities are normalized.

    ``convention`` and ``report_threshold`` record how the census was cut:
    the threshold is interpreted in the convention's scale (doubled = twice
    normalized).  ``below_threshold_mass`` is tracked probability that fell
    under the reporting cut, kept so the accounting closes exactly:
    p_ground + p_target + unwanted + below_threshold + pruned = norm kept.
    """

    n: int
    p_ground: float
    p_target: float
    unwanted: tuple[UnwantedRecord, ...]
    pruned_mass: float
    below_threshold_mass: float
    convention: str
    report_threshold: float
    pulses_applied: int

    @property
    def unwanted_count(self) -> int:
        return len(self.unwanted)

    @property
    def unwanted_mass(self) -> float:
        return sum(r.probability for r in self.unwanted)

    @property
    def scale(self) -> float:
        """Multiplier from normalized to reported probabilities."""
        return 2.0 if self.convention == "doubled" else 1.0

    def scaled(self, probability: float) -> float:
        return self.scale * probability

    def accounting_residual(self) -> float:
        """How far the normalized probability account is from closing on 1."""
        total = (self.p_ground + self.p_target + self.unwanted_mass
                 + self.below_threshold_mass + self.pruned_mass)
        return abs(total - 1.0)


def classify_final(state: SparseState, params: ChainParams,
                   convention: str = "doubled",
                   report_threshold: float = 1e-6) -> RunReport:
    """Split a finished state into desired, unwanted, and under-threshold.

    The desired states are the all-zeros configuration and the one with only
    the two chain ends excited.  Unwanted records are ordered by the
    engine's generation log and cut at ``report_threshold`` (interpreted in
    ``convention`` scale).  The desired pair is always reported whatever its
    probability.
    """
    if state.n != params.n:
        raise ValueError(f"state has {state.n} spins, params expect {params.n}")
    if convention not in ("normalized", "doubled"):
        raise ValueError(f"unknown convention {convention!r}")
    n = state.n
    ground_bits = 0
    target_bits = (1 << (n - 1)) | 1
    cut = report_threshold / 2.0 if convention == "doubled" else report_threshold

    order = {bits: i for i, (bits, _) in enumerate(state.gen_log)}
    first_pulse = {bits: ordinal for bits, ordinal in state.gen_log}

    unwanted = []
    below = 0.0
    for bits, amp in state.amps.items():
        if bits == ground_bits or bits == target_bits:
            continue
        prob = amp.real * amp.real + amp.imag * amp.imag
        if prob < cut:
            below += prob
            continue
        unwanted.append(UnwantedRecord(
            state=BasisState(n, bits),
            probability=prob,
            generation_index=order[bits],
            first_pulse=first_pulse[bits],
            excitation_count=bits.bit_count(),
        ))
    unwanted.sort(key=lambda r: r.generation_index)
    return RunReport(
        n=n,
        p_ground=state.probability(ground_bits),
        p_target=state.probability(target_bits),
        unwanted=tuple(unwanted),
        pruned_mass=state.pruned_mass,
        below_threshold_mass=below,
        convention=convention,
        report_threshold=report_threshold,
        pulses_applied=state.pulses_applied,
    )


# ---------------------------------------------------------------------------
# band structure

@dataclass(frozen=True)
class Band:
    """One cluster of final-state probabilities (normalized values)."""

    count: int
    min_p: float
    median_p: float
    max_p: float


@dataclass(frozen=True)
class BandSummary:
    """Probability clusters, strongest band first."""

    bands: tuple[Band, ...]
    gap_decades: float

    @property
    def band_count(self) -> int:
        return len(self.bands)

    def median_ratio(self) -> float:
        """Ratio of the weakest band's median to the strongest band's.

        The two-band structure of a leaky run is usually quoted this way;
        requires at least two bands.
        """
        if len(self.bands) < 2:
            raise ValueError("need at least two bands for a ratio")
        return self.bands[-1].median_p / self.bands[0].median_p


def _clusters(sorted_probs: list[float], gap_decades: float) -> list[list[float]]:
    """Split ascending probabilities where the log10 gap exceeds the limit."""
    groups = [[sorted_probs[0]]]
    for prev, cur in zip(sorted_probs, sorted_probs[1:]):
        if math.log10(cur) - math.log10(prev) > gap_decades:
            groups.append([cur])
        else:
            groups[-1].append(cur)
    return groups


def detect_bands(probabilities, gap_decades: float = 1.0) -> BandSummary:
    """Cluster probabilities on a log scale.

    A new band opens wherever adjacent sorted values are more than
    ``gap_decades`` apart in log10.  Bands come back strongest first.
    Input order is irrelevant; rescaling all values by one constant leaves
    the memberships unchanged.
    """
    probs = [float(p) for p in probabilities]
    if not probs:
        raise ValueError("no probabilities to cluster")
    if any(p <= 0 for p in probs):
        raise ValueError("probabilities must be positive to take logs")
    if gap_decades <= 0:
        raise ValueError("gap_decades must be positive")
    groups = _clusters(sorted(probs), gap_decades)
    bands = [
        Band(count=len(g), min_p=g[0], median_p=statistics.median(g), max_p=g[-1])
        for g in reversed(groups)
    ]
    return BandSummary(bands=tuple(bands), gap_decades=gap_decades)


def band_substructure(probabilities, gap_decades: float = 1.0,
                      sub_gap_decades: float = 0.5) -> list[BandSummary]:
    """Second-level clustering: each top-level band split with a finer gap.

    Returns one BandSummary per top-level band, in the same strongest-first
    order as detect_bands.
    """
    probs = sorted(float(p) for p in probabilities)
    if not probs:
        raise ValueError("no probabilities to cluster")
    if any(p <= 0 for p in probs):
        raise ValueError("probabilities must be positive to take logs")
    top = _clusters(probs, gap_decades)
    return [detect_bands(group, sub_gap_decades) for group in reversed(top)]


def band_membership(report: RunReport, gap_decades: float = 1.0
                    ) -> list[list[UnwantedRecord]]:
    """Unwanted records grouped by band, strongest band first."""
    if not report.unwanted:
        return []
    records = sorted(report.unwanted, key=lambda r: r.probability)
    groups: list[list[UnwantedRecord]] = [[records[0]]]
    for prev, cur in zip(records, records[1:]):
        gap = math.log10(cur.probability) - math.log10(prev.probability)
        if gap > gap_decades:
            groups.append([cur])
        else:
            groups[-1].append(cur)
    return list(reversed(groups))


def excitation_profile(report: RunReport, gap_decades: float = 1.0
                       ) -> list[dict[int, int]]:
    """Histogram of flipped-spin counts per band, strongest band first.

    An ideal run returns an empty list.  The strongest band of a leaky run
    characteristically skews toward many-spin excitations.
    """
    profiles = []
    for group in band_membership(report, gap_decades):
        hist: dict[int, int] = {}
        for rec in group:
            hist[rec.excitation_count] = hist.get(rec.excitation_count, 0) + 1
        profiles.append(dict(sorted(hist.items())))
    return profiles


# ---------------------------------------------------------------------------
# sweeps

EXPERIMENTS = (
    "omega_sweep",
    "block_offset",
    "random_magnitude",
    "random_block_length",
    "block_position",
)

_KNOB_NAMES = {
    "omega_sweep": "rabi",
    "block_offset": "delta_k",
    "random_magnitude": "epsilon0",
    "random_block_length": "delta_k",
    "block_position": "k1",
}


@dataclass(frozen=True)
class SweepRow:
    """One grid point of a sweep; error text non-empty when the point failed."""

    knob_name: str
    knob_value: float
    c0_sq: float
    target_sq: float
    unwanted_count: int
    pruned_mass: float
    seed: int
    error: str = ""


def _point_spec(experiment: str, knob: float, seed: int,
                config: RunConfig) -> tuple[float, DistortionSpec | None]:
    """Rabi frequency and distortion for one grid point of an experiment.

    - omega_sweep:        knob is the undistorted Rabi frequency
    - block_offset:       knob is delta_k; fixed offset epsilon0 on
                          ordinals [k1, k1 + delta_k]
    - random_magnitude:   knob is epsilon0; random offsets on the config's
                          fixed [k1, k2] block
    - random_block_length: knob is delta_k; random offsets, magnitude from
                          config.epsilon0
    - block_position:     knob is k1; random offsets on a block of the
                          config's length [k1, k1 + (k2 - k1)]
    """
    if experiment == "omega_sweep":
        return float(knob), None
    if experiment == "block_offset":
        dk = _as_index(knob, "delta_k")
        spec = DistortionSpec(
            mode="fixed_offset", k1=config.distort_k1,
            k2=config.distort_k1 + dk, epsilon0=config.epsilon0,
            seed=seed, refit_tau=config.refit_tau,
        )
        return config.rabi, spec
    if experiment == "random_magnitude":
        spec = DistortionSpec(
            mode="uniform_random", k1=config.distort_k1, k2=config.distort_k2,
            epsilon0=float(knob), seed=seed, refit_tau=config.refit_tau,
        )
        return config.rabi, spec
    if experiment == "random_block_length":
        dk = _as_index(knob, "delta_k")
        spec = DistortionSpec(
            mode="uniform_random", k1=config.distort_k1,
            k2=config.distort_k1 + dk, epsilon0=config.epsilon0,
            seed=seed, refit_tau=config.refit_tau,
        )
        return config.rabi, spec
    if experiment == "block_position":
        k1 = _as_index(knob, "k1")
        length = config.distort_k2 - config.distort_k1
        spec = DistortionSpec(
            mode="uniform_random", k1=k1, k2=k1 + length,
            epsilon0=config.epsilon0, seed=seed, refit_tau=config.refit_tau,
        )
        return config.rabi, spec
    raise ValueError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")


def _as_index(knob: float, name: str) -> int:
    value = int(round(float(knob)))
    if abs(value - float(knob)) > 1e-9:
        raise ValueError(f"{name} must be an integer, got {knob!r}")
    return value


def run_experiment_point(experiment: str, knob: float, seed: int,
                         config: RunConfig) -> RunReport:
    """Compile, optionally distort, run, and classify one grid point."""
    rabi, spec = _point_spec(experiment, knob, seed, config)
    params = config.chain_params()
    seq = compile_cn_remote(params, rabi)
    if spec is not None:
        seq = distort(seq, spec)
    final, _ = run_sequence(
        SparseState.ground(params.n), seq.pulses, params,
        prune_threshold=config.prune_threshold,
    )
    return classify_final(final, params, config.convention, config.report_threshold)


def sweep(experiment: str, grid, config: RunConfig) -> list[SweepRow]:
    """One full run per grid point; failures recorded, sweep continues.

    The per-point seed is config.seed + grid index, so any point can be
    reproduced in isolation.  Reported probabilities follow the config's
    convention.
    """
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("sweep grid is empty")
    knob_name = _KNOB_NAMES[experiment]
    rows = []
    for index, knob in enumerate(grid):
        seed = config.seed + index
        try:
            report = run_experiment_point(experiment, knob, seed, config)
        except Exception as exc:  # recorded per point; sweep must go on
            rows.append(SweepRow(
                knob_name=knob_name, knob_value=knob,
                c0_sq=math.nan, target_sq=math.nan,
                unwanted_count=-1, pruned_mass=math.nan,
                seed=seed, error=f"{type(exc).__name__}: {exc}",
            ))
            continue
        rows.append(SweepRow(
            knob_name=knob_name,
            knob_value=knob,
            c0_sq=report.scaled(report.p_ground),
            target_sq=report.scaled(report.p_target),
            unwanted_count=report.unwanted_count,
            pruned_mass=report.pruned_mass,
            seed=seed,
        ))
    return rows

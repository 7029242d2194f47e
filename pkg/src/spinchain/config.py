"""Run configuration: defaults, config-file parsing, flag merging.

Config files are plain ``key = value`` lines with ``#`` comments.  Every key
has a matching command-line flag; flags override the file, the file
overrides defaults.  All randomness downstream flows from the single
``seed`` field.

Two probability conventions are supported for reporting.  ``normalized``
reports |C|^2 as-is (they sum to 1).  ``doubled`` multiplies every
probability by 2, matching the habit of quoting the two desired end states
of the entangling run with unit amplitude each (the 1/sqrt(2) of the
initial half-pulse dropped); counting thresholds are interpreted in the
selected convention.  The convention never touches dynamics, only reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .chain import ChainParams
from .sequence import DISTORTION_MODES, DistortionSpec

CONVENTIONS = ("normalized", "doubled")

#: Prune threshold on normalized probabilities; equals a doubled-convention
#: reporting cut of 1e-6, so by default nothing reportable is ever pruned.
DEFAULT_PRUNE_THRESHOLD = 5e-7

#: Reporting threshold, interpreted in the selected convention.
DEFAULT_REPORT_THRESHOLD = 1e-6


@dataclass(frozen=True)
class RunConfig:
    """Everything a run, sweep, or compile needs, in one immutable record."""

    n_qubits: int
    delta_omega: float = 100.0
    rabi: float = 0.1
    prune_threshold: float = DEFAULT_PRUNE_THRESHOLD
    report_threshold: float = DEFAULT_REPORT_THRESHOLD
    convention: str = "doubled"
    distort_mode: str | None = None
    distort_k1: int = 10
    distort_k2: int = 25
    epsilon0: float = 0.001
    refit_tau: bool = True
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        if self.n_qubits < 3:
            raise ValueError(f"n_qubits must be >= 3, got {self.n_qubits}")
        if self.delta_omega <= 0:
            raise ValueError("delta_omega must be positive")
        if self.rabi <= 0:
            raise ValueError("rabi must be positive")
        if self.prune_threshold < 0:
            raise ValueError("prune_threshold must be >= 0")
        if self.report_threshold < 0:
            raise ValueError("report_threshold must be >= 0")
        if self.convention not in CONVENTIONS:
            raise ValueError(
                f"convention must be one of {CONVENTIONS}, got {self.convention!r}"
            )
        if self.distort_mode is not None and self.distort_mode not in DISTORTION_MODES:
            raise ValueError(
                f"distort_mode must be one of {DISTORTION_MODES}, got {self.distort_mode!r}"
            )
        if self.epsilon0 < 0:
            raise ValueError("epsilon0 must be >= 0")
        if not 1 <= self.distort_k1 <= self.distort_k2:
            raise ValueError(
                f"need 1 <= distort_k1 <= distort_k2, got {self.distort_k1}, {self.distort_k2}"
            )

    def chain_params(self) -> ChainParams:
        return ChainParams.uniform(self.n_qubits, self.delta_omega)

    def distortion(self) -> DistortionSpec | None:
        if self.distort_mode is None:
            return None
        return DistortionSpec(
            mode=self.distort_mode,
            k1=self.distort_k1,
            k2=self.distort_k2,
            epsilon0=self.epsilon0,
            seed=self.seed,
            refit_tau=self.refit_tau,
        )

    def prune_threshold_normalized(self) -> float:
        return self.prune_threshold

    def report_threshold_normalized(self) -> float:
        """Reporting cut converted to the internal normalized scale."""
        if self.convention == "doubled":
            return self.report_threshold / 2.0
        return self.report_threshold

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


class ConfigError(ValueError):
    """A config file or flag value cannot be interpreted."""


def parse_config_file(path) -> dict[str, str]:
    """Read ``key = value`` lines; '#' starts a comment, blank lines skipped."""
    values: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def parse_distort_range(text: str) -> tuple[int, int]:
    """'k1:k2' inclusive pi-pulse ordinals; a bare 'k' means the single pulse k."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            k1 = k2 = int(parts[0])
        elif len(parts) == 2:
            k1, k2 = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise ConfigError(f"expected k1:k2, got {text!r}") from None
    return k1, k2


# config-file/flag key -> (RunConfig field, parser); distort_range expands
# to the two ordinal fields and is handled separately
_SCALAR_KEYS = {
    "n": ("n_qubits", int),
    "delta_omega": ("delta_omega", float),
    "rabi": ("rabi", float),
    "prune_threshold": ("prune_threshold", float),
    "threshold": ("report_threshold", float),
    "convention": ("convention", str),
    "distort_mode": ("distort_mode", str),
    "epsilon0": ("epsilon0", float),
    "refit_tau": ("refit_tau", _parse_bool),
    "seed": ("seed", int),
    "out": ("out_dir", str),
}


def build_config(file_values: dict[str, str] | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Merge defaults, config-file strings, and already-typed overrides.

    ``file_values`` are raw strings from parse_config_file; ``overrides``
    (typically from command-line flags) are applied last and must already
    have the right types.  Unknown keys are rejected rather than ignored.
    """
    settings: dict = {}
    for key, raw in (file_values or {}).items():
        if key == "distort_range":
            settings["distort_k1"], settings["distort_k2"] = parse_distort_range(raw)
            continue
        if key not in _SCALAR_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        name, parse = _SCALAR_KEYS[key]
        try:
            settings[name] = parse(raw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None
    for name, value in (overrides or {}).items():
        if value is None:
            continue
        valid = {f.name for f in fields(RunConfig)}
        if name not in valid:
            raise ConfigError(f"unknown config field {name!r}")
        settings[name] = value
    if "n_qubits" not in settings:
        raise ConfigError("n (number of qubits) is required")
    try:
        return RunConfig(**settings)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

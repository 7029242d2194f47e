"""Deterministic artifact serialization.

Identical inputs must produce byte-identical files, so everything here is
fixed-format: floats are written with 17 significant digits (enough to
round-trip any double exactly), line endings are always "\\n", map keys are
emitted in a fixed order, and no timestamps or environment details leak
into the output.  Wall-clock timing belongs on stdout, never in artifacts.
"""

from __future__ import annotations

import csv
import io as _io
import math
from pathlib import Path

from .analysis import RunReport, SweepRow, detect_bands, excitation_profile
from .config import RunConfig
from .engine import SparseState, TraceRow


def fmt17(value: float) -> str:
    """Canonical float rendering: 17 significant digits, exact round-trip."""
    return format(float(value), ".17g")


def dumps_json(obj, indent: int = 0) -> str:
    """Serialize to JSON with fmt17 floats and stable key order.

    Dict keys are emitted in insertion order (callers build them
    deterministically); floats must be finite.
    """
    out = _io.StringIO()
    _write_json(out, obj, indent, 0)
    out.write("\n")
    return out.getvalue()


def _write_json(out, obj, indent: int, level: int) -> None:
    pad = " " * (indent * (level + 1)) if indent else ""
    close_pad = " " * (indent * level) if indent else ""
    sep = ",\n" if indent else ", "
    if obj is None:
        out.write("null")
    elif obj is True:
        out.write("true")
    elif obj is False:
        out.write("false")
    elif isinstance(obj, int):
        out.write(str(obj))
    elif isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float {obj!r} has no JSON form")
        out.write(fmt17(obj))
    elif isinstance(obj, str):
        out.write(_json_string(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{\n" if indent else "{")
        for i, (key, value) in enumerate(obj.items()):
            if not isinstance(key, str):
                raise TypeError(f"JSON keys must be strings, got {key!r}")
            if i:
                out.write(sep)
            out.write(pad)
            out.write(_json_string(key))
            out.write(": ")
            _write_json(out, value, indent, level + 1)
        out.write(("\n" + close_pad + "}") if indent else "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.write("[]")
            return
        out.write("[\n" if indent else "[")
        for i, value in enumerate(obj):
            if i:
                out.write(sep)
            out.write(pad)
            _write_json(out, value, indent, level + 1)
        out.write(("\n" + close_pad + "]") if indent else "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


_ESCAPES = {
    '"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t",
    "\b": "\\b", "\f": "\\f",
}


def _json_string(text: str) -> str:
    parts = ['"']
    for ch in text:
        if ch in _ESCAPES:
            parts.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            parts.append(f"\\u{ord(ch):04x}")
        else:
            parts.append(ch)
    parts.append('"')
    return "".join(parts)


def write_text(path, content: str) -> None:
    Path(path).write_text(content, newline="")


def write_json(path, obj, indent: int = 2) -> None:
    write_text(path, dumps_json(obj, indent))


# ---------------------------------------------------------------------------
# CSV artifacts

def _csv_text(header: list[str], rows) -> str:
    out = _io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue()


def unwanted_csv_text(report: RunReport) -> str:
    """Unwanted-state census; probabilities in the report's convention.

    ones_positions lists excited spins highest-first, ';'-separated, so the
    column survives comma-based CSV parsing.
    """
    rows = []
    for rec in report.unwanted:
        rows.append([
            rec.generation_index,
            rec.state.to_hex(),
            ";".join(map(str, rec.state.ones())),
            rec.excitation_count,
            fmt17(report.scaled(rec.probability)),
        ])
    return _csv_text(
        ["generation_index", "basis_hex", "ones_positions",
         "excitation_count", "probability"],
        rows,
    )


def write_unwanted_csv(path, report: RunReport) -> None:
    write_text(path, unwanted_csv_text(report))


def trace_csv_text(trace: list[TraceRow]) -> str:
    rows = []
    for row in trace:
        rows.append([
            row.pulse_index,
            fmt17(row.omega),
            fmt17(row.rabi),
            fmt17(row.tau),
            row.tracked_states,
            fmt17(row.norm),
            fmt17(row.pruned_mass),
        ])
    return _csv_text(
        ["pulse_index", "omega", "rabi", "tau", "tracked_states",
         "norm", "pruned_mass_cumulative"],
        rows,
    )


def write_trace_csv(path, trace: list[TraceRow]) -> None:
    write_text(path, trace_csv_text(trace))


def sweep_csv_text(rows: list[SweepRow]) -> str:
    table = []
    for row in rows:
        table.append([
            row.knob_name,
            fmt17(row.knob_value),
            fmt17(row.c0_sq),
            fmt17(row.target_sq),
            row.unwanted_count,
            fmt17(row.pruned_mass),
            row.seed,
        ])
    return _csv_text(
        ["knob_name", "knob_value", "c0_sq", "target_sq",
         "unwanted_count", "pruned_mass", "seed"],
        table,
    )


def write_sweep_csv(path, rows: list[SweepRow]) -> None:
    write_text(path, sweep_csv_text(rows))


# ---------------------------------------------------------------------------
# JSON artifacts

def amplitudes_to_dict(state: SparseState) -> dict:
    """Sparse amplitude map as JSON: {hex: [re, im]}, keys sorted."""
    width = (state.n + 3) // 4
    amps = {}
    for bits in sorted(state.amps):
        c = state.amps[bits]
        amps[format(bits, f"0{width}x")] = [c.real, c.imag]
    return {
        "n": state.n,
        "t": state.t,
        "pulses_applied": state.pulses_applied,
        "pruned_mass": state.pruned_mass,
        "amplitudes": amps,
    }


def write_amplitudes_json(path, state: SparseState) -> None:
    write_json(path, amplitudes_to_dict(state))


def report_to_dict(report: RunReport, config: RunConfig | None = None,
                   band_gap_decades: float = 1.0) -> dict:
    """Full run summary; all probability-like values in the report's scale.

    ``accounting_residual`` stays normalized (distance of the total
    probability account from 1), so it is comparable across conventions.
    """
    scale = report.scale
    data: dict = {
        "n": report.n,
        "pulses_applied": report.pulses_applied,
        "convention": report.convention,
        "report_threshold": report.report_threshold,
    }
    if config is not None:
        data["rabi"] = config.rabi
        data["delta_omega"] = config.delta_omega
        data["prune_threshold"] = config.prune_threshold
        data["seed"] = config.seed
        spec = config.distortion()
        data["distortion"] = None if spec is None else {
            "mode": spec.mode,
            "k1": spec.k1,
            "k2": spec.k2,
            "epsilon0": spec.epsilon0,
            "seed": spec.seed,
            "refit_tau": spec.refit_tau,
        }
    data.update({
        "p_ground": scale * report.p_ground,
        "p_target": scale * report.p_target,
        "unwanted_count": report.unwanted_count,
        "unwanted_mass": scale * report.unwanted_mass,
        "below_threshold_mass": scale * report.below_threshold_mass,
        "pruned_mass": scale * report.pruned_mass,
        "accounting_residual": report.accounting_residual(),
    })
    if report.unwanted:
        summary = detect_bands(
            [r.probability for r in report.unwanted], band_gap_decades)
        data["bands"] = [
            {
                "count": b.count,
                "min_p": scale * b.min_p,
                "median_p": scale * b.median_p,
                "max_p": scale * b.max_p,
            }
            for b in summary.bands
        ]
        data["excitation_profile"] = [
            {str(k): v for k, v in hist.items()}
            for hist in excitation_profile(report, band_gap_decades)
        ]
    else:
        data["bands"] = []
        data["excitation_profile"] = []
    data["band_gap_decades"] = band_gap_decades
    return data


def write_report_json(path, report: RunReport, config: RunConfig | None = None,
                      band_gap_decades: float = 1.0) -> None:
    write_json(path, report_to_dict(report, config, band_gap_decades))

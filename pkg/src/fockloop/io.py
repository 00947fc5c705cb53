"""File outputs and inputs: CSV logs, JSON summaries.

All writers are byte-stable for fixed inputs: floats are rendered with
repr (shortest round-trip form), newlines are always "\n", and JSON keys
keep insertion order. I/O failures are re-raised with the path attached.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ConfigError
from .measurement import OUTCOME_CHARS

TRAJECTORY_COLUMNS = (
    "cycle", "time_s", "outcome", "phase_idx", "alpha", "F_est", "F_real",
    "n_mean_est", "p_below_est", "p_tag_est", "p_above_est",
    "p_below_real", "p_tag_real", "p_above_real", "jump_flag")

CURVES_COLUMNS = (
    "cycle", "time_s", "F_est_mean", "F_real_mean",
    "p_below_est_mean", "p_tag_est_mean", "p_above_est_mean",
    "p_below_real_mean", "p_tag_real_mean", "p_above_real_mean")

CONVERGENCE_COLUMNS = (
    "bin_index", "bin_start_cycle", "bin_end_cycle", "count",
    "fraction", "cumulative_fraction")

JUMP_COLUMNS = ("offset_cycle", "offset_s", "F_real_mean", "F_est_mean", "count")

_OUTCOME_CODES = {c: i for i, c in enumerate(OUTCOME_CHARS)}


def _f(x) -> str:
    return repr(float(x))


def write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_json(path: str, payload: dict) -> None:
    write_text(path, json.dumps(payload, indent=2) + "\n")


def trajectory_csv_text(log) -> str:
    """Render one trajectory log; one row per cycle, exact column order."""
    lines = [",".join(TRAJECTORY_COLUMNS)]
    t_a = log.T_a
    for i in range(log.cycles):
        cycle = i + 1
        lines.append(",".join((
            str(cycle),
            _f(cycle * t_a),
            OUTCOME_CHARS[log.outcome[i]],
            str(int(log.phase_idx[i])),
            _f(log.alpha[i]),
            _f(log.F_est[i]),
            _f(log.F_real[i]),
            _f(log.n_mean_est[i]),
            _f(log.p_below_est[i]),
            _f(log.p_tag_est[i]),
            _f(log.p_above_est[i]),
            _f(log.p_below_real[i]),
            _f(log.p_tag_real[i]),
            _f(log.p_above_real[i]),
            str(int(log.jump_flag[i])),
        )))
    return "\n".join(lines) + "\n"


def write_trajectory_csv(path: str, log) -> None:
    write_text(path, trajectory_csv_text(log))


def trajectory_json_payload(log, config_echo: dict, cfg_hash: str, version: str) -> dict:
    rows = []
    t_a = log.T_a
    for i in range(log.cycles):
        cycle = i + 1
        rows.append([
            cycle, cycle * t_a, OUTCOME_CHARS[log.outcome[i]],
            int(log.phase_idx[i]), float(log.alpha[i]), float(log.F_est[i]),
            float(log.F_real[i]), float(log.n_mean_est[i]),
            float(log.p_below_est[i]), float(log.p_tag_est[i]),
            float(log.p_above_est[i]), float(log.p_below_real[i]),
            float(log.p_tag_real[i]), float(log.p_above_real[i]),
            int(log.jump_flag[i]),
        ])
    return {
        "schema": "trajectory",
        "version": version,
        "config": config_echo,
        "config_hash": cfg_hash,
        "columns": list(TRAJECTORY_COLUMNS),
        "rows": rows,
        "convergence_cycle": log.convergence_cycle,
        "clamp_events": log.clamp_events,
    }


def _read_rows(path: str) -> tuple[list, list]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise ConfigError(f"{path}: empty file")
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def read_trajectory_csv(path: str) -> dict:
    """Parse a trajectory CSV back into arrays; the header must match the
    writer's schema verbatim."""
    header, rows = _read_rows(path)
    if tuple(header) != TRAJECTORY_COLUMNS:
        raise ConfigError(
            f"{path}: header {header!r} does not match the trajectory schema")
    n = len(rows)
    out = {
        "cycle": np.empty(n, dtype=np.int64),
        "time_s": np.empty(n),
        "outcome": np.empty(n, dtype=np.int8),
        "phase_idx": np.empty(n, dtype=np.int8),
        "alpha": np.empty(n),
        "F_est": np.empty(n),
        "F_real": np.empty(n),
        "n_mean_est": np.empty(n),
        "p_below_est": np.empty(n),
        "p_tag_est": np.empty(n),
        "p_above_est": np.empty(n),
        "p_below_real": np.empty(n),
        "p_tag_real": np.empty(n),
        "p_above_real": np.empty(n),
        "jump_flag": np.empty(n, dtype=np.int8),
    }
    for i, row in enumerate(rows):
        if len(row) != len(TRAJECTORY_COLUMNS):
            raise ConfigError(f"{path}: row {i + 2} has {len(row)} fields")
        if row[2] not in _OUTCOME_CODES:
            raise ConfigError(f"{path}: row {i + 2} has outcome {row[2]!r}")
        out["cycle"][i] = int(row[0])
        out["time_s"][i] = float(row[1])
        out["outcome"][i] = _OUTCOME_CODES[row[2]]
        out["phase_idx"][i] = int(row[3])
        out["alpha"][i] = float(row[4])
        for j, key in enumerate(TRAJECTORY_COLUMNS[5:14], start=5):
            out[key][i] = float(row[j])
        out["jump_flag"][i] = int(row[14])
    return out


def curves_csv_text(curves: dict) -> str:
    lines = [",".join(CURVES_COLUMNS)]
    n = len(curves["cycle"])
    for i in range(n):
        lines.append(",".join(
            [str(int(curves["cycle"][i])), _f(curves["time_s"][i])]
            + [_f(curves[key][i]) for key in CURVES_COLUMNS[2:]]))
    return "\n".join(lines) + "\n"


def write_curves_csv(path: str, curves: dict) -> None:
    write_text(path, curves_csv_text(curves))


def convergence_csv_text(hist: dict) -> str:
    lines = [",".join(CONVERGENCE_COLUMNS)]
    for i in range(len(hist["count"])):
        lines.append(",".join((
            str(i),
            str(int(hist["bin_start_cycle"][i])),
            str(int(hist["bin_end_cycle"][i])),
            str(int(hist["count"][i])),
            _f(hist["fraction"][i]),
            _f(hist["cumulative_fraction"][i]),
        )))
    return "\n".join(lines) + "\n"


def write_convergence_csv(path: str, hist: dict) -> None:
    write_text(path, convergence_csv_text(hist))


def jump_csv_text(aligned: dict) -> str:
    lines = [",".join(JUMP_COLUMNS)]
    for i in range(len(aligned["offset_cycle"])):
        lines.append(",".join((
            str(int(aligned["offset_cycle"][i])),
            _f(aligned["offset_s"][i]),
            _f(aligned["F_real_mean"][i]),
            _f(aligned["F_est_mean"][i]),
            str(int(aligned["count"][i])),
        )))
    return "\n".join(lines) + "\n"


def write_jump_csv(path: str, aligned: dict) -> None:
    write_text(path, jump_csv_text(aligned))


def ensure_dir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc}") from exc

"""File formats: data CSVs, model JSON, trace CSV, bench report CSV."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import ModelParams

TRACE_COLUMNS = ("iter", "objective", "grad_norm", "primal_residual", "dual_residual", "mu", "elapsed_ms")
REPORT_COLUMNS = ("seed", "n", "p", "m", "gd_iters", "admm_iters", "f_star", "agree")


def fmt(value) -> str:
    """17 significant digits, enough to round-trip any double."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def read_matrix_csv(path) -> np.ndarray:
    """Numeric CSV with an optional non-numeric header row."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if lineno == 1 and not rows:
                    continue
                raise ValueError(f"{path}:{lineno}: non-numeric cell") from None
            if len(rows[-1]) != len(rows[0]):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(rows[0])} columns, found {len(rows[-1])}"
                )
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def write_matrix_csv(path, matrix, header=None) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(header)
        writer.writerows([fmt(v) for v in row] for row in matrix)


def model_to_dict(params: ModelParams) -> dict:
    return {
        "n": params.n,
        "p": params.p,
        "lambda": params.lam.ravel().tolist(),
        "theta": params.theta.ravel().tolist(),
    }


def model_from_dict(doc: dict) -> ModelParams:
    n, p = int(doc["n"]), int(doc["p"])
    lam = np.array(doc["lambda"], dtype=float)
    theta = np.array(doc["theta"], dtype=float)
    if lam.size != p * p or theta.size != n * p:
        raise ValueError(f"model arrays do not match n={n}, p={p}")
    return ModelParams(lam.reshape(p, p), theta.reshape(n, p))


def save_model(path, params: ModelParams) -> None:
    # json emits repr(float), which is the shortest exact round-trip form
    Path(path).write_text(json.dumps(model_to_dict(params), indent=2) + "\n", encoding="utf-8")


def load_model(path) -> ModelParams:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in trace:
            writer.writerow(
                [
                    fmt(r.iteration),
                    fmt(r.objective),
                    fmt(r.grad_norm),
                    fmt(r.primal_residual),
                    fmt(r.dual_residual),
                    fmt(r.mu),
                    format(r.elapsed_ms, ".3f"),
                ]
            )


def read_trace_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            {k: (float(v) if v != "" else None) for k, v in row.items()}
            for row in csv.DictReader(fh)
        ]


def write_report_csv(target, rows) -> None:
    """Write bench rows to a path or an open text stream."""
    if hasattr(target, "write"):
        _write_report(target, rows)
        return
    with open(target, "w", newline="", encoding="utf-8") as fh:
        _write_report(fh, rows)


def _write_report(fh, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in REPORT_COLUMNS])

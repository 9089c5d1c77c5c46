"""Persistence: CSV spectra, JSON reports, npz model and operator containers."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .complex_engine import GradedOperator
from .system_models import SystemModel

CSV_HEADER = ("degree", "index", "eigenvalue")
REPORT_DIGITS = 10


def format_float(x: float) -> str:
    return "%.17g" % x


def write_spectrum_csv(path, spectra) -> Path:
    """Write ``{degree: eigenvalues}`` (or a list indexed by degree) as CSV."""
    path = Path(path)
    items = spectra.items() if isinstance(spectra, dict) else enumerate(spectra)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for degree, values in items:
            for i, v in enumerate(np.asarray(values, dtype=float)):
                w.writerow((int(degree), i, format_float(v)))
    return path


def read_spectrum_csv(path) -> dict[int, np.ndarray]:
    out: dict[int, list] = {}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        for degree, index, value in reader:
            vals = out.setdefault(int(degree), [])
            if int(index) != len(vals):
                raise ValueError(f"non-contiguous index {index} in degree {degree}")
            vals.append(float(value))
    return {k: np.array(v) for k, v in out.items()}


def spectrum_filename(model_hash: str, h_spec: dict | None, u: float, size) -> str:
    htag = "h0" if not h_spec or not h_spec.get("amplitude") else f"{h_spec['template']}-{h_spec['amplitude']:g}"
    return f"spectrum_{model_hash}_{htag}_u{u:g}_{size}.csv"


def round_floats(obj, digits: int = REPORT_DIGITS):
    """Recursively round floats to ``digits`` significant digits for stable reports."""
    if isinstance(obj, dict):
        return {str(k): round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist(), digits)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return float(f"{x:.{digits}g}")
    if isinstance(obj, complex):
        return {"re": round_floats(obj.real, digits), "im": round_floats(obj.imag, digits)}
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(round_floats(obj), indent=2, sort_keys=True) + "\n")
    return path


def save_model(path, model: SystemModel) -> Path:
    """Self-describing npz: derivations, trace, unit and a JSON metadata string."""
    meta = model.to_dict()
    for key in ("derivations", "trace", "unit"):
        meta.pop(key)
    np.savez(
        path,
        derivations=np.stack(model.derivations),
        trace=model.trace,
        unit=model.unit,
        metadata=np.array(json.dumps(meta, sort_keys=True, default=str)),
    )
    return Path(path)


def load_model_arrays(path) -> dict:
    with np.load(path, allow_pickle=False) as z:
        return {
            "derivations": z["derivations"],
            "trace": z["trace"],
            "unit": z["unit"],
            "metadata": json.loads(str(z["metadata"])),
        }


def save_operator(path, op: GradedOperator, provenance: dict | None = None) -> Path:
    """Dense matrix (row-major) plus provenance: model hash, h spec, u, degree sizes."""
    meta = {
        "label": op.label,
        "degree_shift": op.degree_shift,
        "hermitian": op.hermitian,
        "degree_dims": list(op.space.degree_dims),
        "model_hash": op.space.model.fingerprint(),
        "meta": op.meta,
        **(provenance or {}),
    }
    np.savez(path, matrix=op.dense(), metadata=np.array(json.dumps(meta, sort_keys=True, default=str)))
    return Path(path)


def load_operator(path) -> tuple[np.ndarray, dict]:
    with np.load(path, allow_pickle=False) as z:
        return z["matrix"], json.loads(str(z["metadata"]))

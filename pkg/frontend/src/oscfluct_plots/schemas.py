"""CSV loading with strict header validation.

Every reader checks the header row against the schema the simulation side
documents; a mismatch is a SchemaError, never a silent reinterpretation.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = ["SchemaError", "load_csv", "SCHEMAS"]

SCHEMAS = {
    "correlation": ["t", "j", "S", "stderr"],
    "kernel": ["x", "P"],
    "kernel_compare": ["t", "L1_error", "Linf_error"],
    "norms": ["n", "norm_name", "value"],
    "levy_convergence": ["n", "a", "error"],
    "spectrum": ["k", "variance", "stderr"],
    "bg2": ["ell", "diagnostic", "bound"],
}


class SchemaError(ValueError):
    pass


def load_csv(path: str | Path, schema: str) -> dict[str, np.ndarray]:
    """Load a CSV whose header must equal the named schema exactly.

    Columns come back as float arrays except norms.norm_name, which stays
    as strings.
    """
    if schema not in SCHEMAS:
        raise SchemaError(f"unknown schema {schema!r}")
    expected = SCHEMAS[schema]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != expected:
            raise SchemaError(
                f"{path}: header {header} does not match the documented "
                f"schema {expected}"
            )
        rows = list(reader)
    out: dict[str, np.ndarray] = {}
    for i, name in enumerate(expected):
        col = [r[i] for r in rows]
        if schema == "norms" and name == "norm_name":
            out[name] = np.asarray(col, dtype=object)
        else:
            try:
                out[name] = np.asarray(col, dtype=float)
            except ValueError as exc:
                raise SchemaError(f"{path}: column {name}: {exc}") from None
    return out

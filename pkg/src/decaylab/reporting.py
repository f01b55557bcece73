"""Run reports, trace CSVs, the operator dump format, and run diffs.

Report layout (JSON, schema-versioned):

    {
      "schema_version": 1,
      "config": { ... echo ... },
      "config_hash": "...",
      "environment": {"python": ..., "numpy": ..., "scipy": ..., "platform": ...},
      "stage_seconds": {"forge": ..., "commutator": ..., ...},
      "verdicts": {"P53": "PASS", ...},
      "checks": {"P53": { ... constants ... }, ...},
      "overall": "pass" | "fail" | "vacuous"
    }

The `verdicts` block is serialized with sorted keys and canonical float
repr, so identical runs produce byte-identical verdict sections.

Operator dump format (CSV, documented here and in the README):
  line 1: ``# decaylab-operator dim=<n> role=<role> grid=<hash>``
  lines 2..n+1: row-major complex pairs ``re,im,re,im,...`` (2n floats per row).
"""

from __future__ import annotations

import json
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .operators import HermitianOperator, hermitian

REPORT_SCHEMA_VERSION = 1

#: relative threshold below which drifting constants are "no difference"
COMPARE_RTOL = 1e-9


def environment_fingerprint() -> dict:
    import scipy

    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


@dataclass
class RunReport:
    """Aggregated verdicts and constants for one experiment run."""

    config: dict
    config_hash: str
    verdicts: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    stage_seconds: dict = field(default_factory=dict)
    environment: dict = field(default_factory=environment_fingerprint)
    schema_version: int = REPORT_SCHEMA_VERSION

    @property
    def overall(self) -> str:
        verdicts = [str(v) for v in self.verdicts.values()]
        if any(v.startswith("FAIL") for v in verdicts):
            return "fail"
        if any("vacuous" in v for v in verdicts):
            return "vacuous"
        return "pass"

    @property
    def exit_code(self) -> int:
        return {"pass": 0, "fail": 2, "vacuous": 3}[self.overall]

    def verdict_blob(self) -> str:
        """Canonical serialization of the verdict section (byte-stable)."""
        return json.dumps(self.verdicts, sort_keys=True, separators=(",", ":"))

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "config_hash": self.config_hash,
            "environment": self.environment,
            "stage_seconds": {k: round(v, 6) for k, v in self.stage_seconds.items()},
            "verdicts": dict(sorted(self.verdicts.items())),
            "checks": self.checks,
            "overall": self.overall,
        }

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default))
        return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def load_report(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_decay_csv(path: str | Path, trace, envelope_index: np.ndarray) -> Path:
    """Columns: t, Re psi, Im psi, |psi|, is_envelope."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    flags = np.zeros(trace.times.size, dtype=int)
    flags[envelope_index] = 1
    with open(path, "w") as fh:
        fh.write("t,re_psi,im_psi,abs_psi,is_envelope\n")
        for t, v, m, e in zip(trace.times, trace.values, trace.magnitudes, flags):
            fh.write(f"{t:.17g},{v.real:.17g},{v.imag:.17g},{m:.17g},{e}\n")
    return path


def write_smoothness_csv(path: str | Path, report, sample_index: int = 0) -> Path:
    """Columns: t, integrand, cumulative (one file per sample)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    times = report.times
    integrand = report.integrands[sample_index]
    cumulative = report.cumulative[sample_index]
    with open(path, "w") as fh:
        fh.write("t,integrand,cumulative\n")
        for t, f, c in zip(np.atleast_1d(times), np.atleast_1d(integrand), np.atleast_1d(cumulative)):
            fh.write(f"{t:.17g},{f:.17g},{c:.17g}\n")
    return path


def dump_operator(path: str | Path, op: HermitianOperator) -> Path:
    """Write an operator in the documented CSV matrix format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid_hash = op.grid.digest() if op.grid is not None else "none"
    with open(path, "w") as fh:
        fh.write(f"# decaylab-operator dim={op.dim} role={op.role} grid={grid_hash}\n")
        m = op.mat.astype(complex)
        for row in m:
            fh.write(",".join(f"{z.real:.17g},{z.imag:.17g}" for z in row) + "\n")
    return path


def load_operator(path: str | Path) -> tuple[HermitianOperator, str]:
    """Read an operator dump; returns (operator, grid hash)."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# decaylab-operator "):
            raise ValueError(f"{path}: not an operator dump")
        fields = dict(part.split("=", 1) for part in header.split()[2:])
        dim = int(fields["dim"])
        role = fields.get("role", "generic")
        rows = []
        for line in fh:
            vals = np.array([float(x) for x in line.strip().split(",")])
            rows.append(vals[0::2] + 1j * vals[1::2])
    m = np.array(rows)
    if m.shape != (dim, dim):
        raise ValueError(f"{path}: expected {dim}x{dim}, got {m.shape}")
    return hermitian(m, role=role), fields.get("grid", "none")


def _walk_numbers(tree, path=""):
    if isinstance(tree, dict):
        for k, v in tree.items():
            yield from _walk_numbers(v, f"{path}.{k}" if path else str(k))
    elif isinstance(tree, list):
        for i, v in enumerate(tree):
            yield from _walk_numbers(v, f"{path}[{i}]")
    elif isinstance(tree, (int, float)) and not isinstance(tree, bool):
        yield path, float(tree)


def compare_runs(report_a: dict, report_b: dict, rtol: float = COMPARE_RTOL) -> dict:
    """Field-wise diff of two run reports.

    Verdict flips are highlighted; numeric constants are compared with the
    relative threshold and drift below it is not a difference.  Schema
    version mismatch is an explicit error.
    """
    va = report_a.get("schema_version")
    vb = report_b.get("schema_version")
    if va != vb:
        raise ValueError(f"schema version mismatch: {va} vs {vb}")

    flips = []
    averd, bverd = report_a.get("verdicts", {}), report_b.get("verdicts", {})
    for key in sorted(set(averd) | set(bverd)):
        if averd.get(key) != bverd.get(key):
            flips.append({"check": key, "a": averd.get(key), "b": bverd.get(key)})

    drifts = []
    na = dict(_walk_numbers(report_a.get("checks", {})))
    nb = dict(_walk_numbers(report_b.get("checks", {})))
    for key in sorted(set(na) & set(nb)):
        x, y = na[key], nb[key]
        denom = max(abs(x), abs(y), 1e-300)
        if abs(x - y) / denom > rtol:
            drifts.append({"field": key, "a": x, "b": y, "relative": abs(x - y) / denom})
    missing = sorted(set(na) ^ set(nb))

    return {
        "verdict_flips": flips,
        "constant_drifts": drifts,
        "missing_fields": missing,
        "identical": not flips and not drifts and not missing,
    }

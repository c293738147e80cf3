"""
Collect result files and compare them with the reference values.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from . import anchors
from .observables import analytic_background


def _load(path):
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValueError("not a result document (missing 'kind')")
    return doc


def run_report(paths) -> dict:
    """Pass/fail checks for every recognised result file.

    Unreadable files are reported under ``errors`` and skipped.
    """
    checks, errors, warnings = [], {}, []
    pinning = {}
    for path in paths:
        try:
            doc = _load(path)
            kind = doc["kind"]
            if kind == "sweep":
                recipe = doc["config"].get("output", {}).get("recipe")
                records = doc["records"]
                if recipe == "flux_sweep":
                    checks += anchors.check_flux_sweep(records)
                elif recipe == "pinning_sweep":
                    pinning[float(doc["config"]["base"]["n_phi"])] = records
                elif recipe == "finite_u":
                    checks += anchors.check_finite_u(records)
                else:
                    warnings.append(f"{path}: sweep without a known recipe; no checks")
            elif kind == "vorticity":
                checks += anchors.check_vorticity(doc, analytic_background(1 / 16, 1 / 2, 2))
            elif kind == "spinfit":
                checks += anchors.check_spinfit(doc["fit"])
            elif kind == "perturb":
                gaps = {float(k): tuple(v) for k, v in doc["h0_gaps"].items()}
                checks += anchors.check_perturb(doc["bloch"], tuple(doc["exact"]), gaps)
            else:
                warnings.append(f"{path}: kind '{kind}' has no checks")
        except Exception as exc:  # per-file error, continue with the rest
            errors[str(path)] = f"{type(exc).__name__}: {exc}"
    if pinning:
        try:
            checks += anchors.check_pinning_sweeps(pinning)
        except KeyError as exc:
            warnings.append(f"pinning sweeps incomplete: {exc}")
    if not paths:
        warnings.append("no input files")
    return {"checks": [c.to_dict() for c in sorted(checks, key=lambda c: c.criterion)],
            "passed": sum(c.passed for c in checks), "failed": sum(not c.passed for c in checks),
            "errors": errors, "warnings": warnings}


def to_markdown(report: dict) -> str:
    lines = ["| criterion | check | value | target | result |", "|---|---|---|---|---|"]
    for c in report["checks"]:
        lines.append(f"| {c['criterion']} | {c['name']} | {c['value']} | {c['target']} | "
                     f"{'pass' if c['passed'] else 'FAIL'} |")
    for path, err in report["errors"].items():
        lines.append(f"\nerror in {path}: {err}")
    for w in report["warnings"]:
        lines.append(f"\nwarning: {w}")
    return "\n".join(lines) + "\n"


def write_report(report: dict, out) -> None:
    out = Path(out)
    if out.suffix == ".md":
        out.write_text(to_markdown(report))
    else:
        out.write_text(json.dumps(report, indent=1, default=lambda v: None if isinstance(v, float) and not math.isfinite(v) else str(v)))

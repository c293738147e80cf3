"""
Reference values of the 4x4 study and pass/fail checks against them.

Each ``check_*`` function takes already computed results and returns a list
of :class:`Check` rows; nothing here runs a diagonalisation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

JUMPS = (0.73, 1.93, 2.06, 2.94)
JUMP_TOL = 0.02
H0_GAPS = {0.5: (0.28, 1.91), 2.0: (0.27, 1.82), 1.0: (0.19, 0.11), 3.0: (0.10, 0.21)}
R_REF = (5.591e-4, 3.866e-4, 3.198e-4, 0.0)
SPIN_REF = {"f_xx_abs": 0.06309, "f_zz": 0.2236, "c": -13.28}


@dataclass
class Check:
    criterion: int
    name: str
    value: object
    target: str
    passed: bool

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.criterion}: {self.name} = {self.value} (target {self.target})"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value"] = _jsonable(d["value"])
        return d


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _rows(records):
    """Records as dicts, whether dataclasses or parsed JSON."""
    out = []
    for r in records:
        d = r if isinstance(r, dict) else asdict(r)
        out.append({k: (float("nan") if v is None and k not in ("error", "vorticity") else v)
                    for k, v in d.items()})
    return out


def _at(rows, value, key="parameter"):
    for r in rows:
        if abs(r[key] - value) < 1e-9:
            return r
    raise KeyError(f"no sample at {value}")


def check_flux_sweep(records) -> list[Check]:
    """Coherence plateau, peak, phase law, jumps, fidelity and EoF at j_pin = 0.6."""
    rows = _rows(records)
    n = np.array([r["parameter"] for r in rows])
    ca = np.array([r["corr_abs"] for r in rows])
    out = []
    mid = (n > 0.1) & (n < 1.9)
    lo, hi = float(ca[mid].min()), float(ca[mid].max())
    out.append(Check(1, "|<a1+a2>| range on (0.1, 1.9)", (round(lo, 4), round(hi, 4)), "within [0.20, 0.30]",
                     0.20 <= lo and hi <= 0.30))
    win = (n >= 1.9 - 1e-9) & (n <= 2.1 + 1e-9)
    k = int(np.argmax(np.where(win, ca, -np.inf)))
    out.append(Check(1, "peak of |<a1+a2>| on [1.9, 2.1]", (float(n[k]), round(float(ca[k]), 4)),
                     "at 2.0, value in [0.42, 0.50]", abs(n[k] - 2.0) < 1e-9 and 0.42 <= ca[k] <= 0.50))

    res = np.array([r["phase_residual"] for r in rows])
    mask = ca > 1e-3
    worst = float(np.nanmax(res[mask]))
    out.append(Check(2, "max phase-law residual where |c| > 1e-3", worst, "< 1e-6 rad", worst < 1e-6))
    jumps = find_jumps(rows)
    locs = [j["location"] for j in jumps]
    matched = []
    for target in JUMPS:
        near = [j for j in jumps if abs(j["location"] - target) <= JUMP_TOL]
        matched.append(near[0] if near else None)
    out.append(Check(2, "detected m-jumps", [round(x, 3) for x in locs], f"within {JUMP_TOL} of {JUMPS}",
                     all(m is not None for m in matched)))
    first3 = [m for m in matched[:3]]
    ok = all(m is not None and m["overlap"] < 0.1 and m["gap"] < 0.005 for m in first3)
    out.append(Check(2, "overlap / gap at first three jumps",
                     [None if m is None else (round(m["overlap"], 4), round(m["gap"], 5)) for m in first3],
                     "overlap < 0.1, gap < 0.005", ok))
    r2 = _at(rows, 2.0)
    out.append(Check(3, "fidelity at n_phi = 2", round(r2["fidelity"], 4), ">= 0.95", r2["fidelity"] >= 0.95))
    out.append(Check(3, "EoF at n_phi = 2", round(r2["eof"], 4), "in [0.69, 0.75]", 0.69 <= r2["eof"] <= 0.75))
    return out


def find_jumps(rows) -> list[dict]:
    out = []
    prev = None
    for r in rows:
        if math.isnan(r["phase_m"]):
            prev = None
            continue
        if prev is not None and r["phase_m"] != prev["phase_m"]:
            out.append({"location": 0.5 * (prev["parameter"] + r["parameter"]),
                        "overlap": r["overlap_prev"], "gap": min(prev["gap"], r["gap"])})
        prev = r
    return out


def check_pinning_sweeps(sweeps: dict) -> list[Check]:
    """``sweeps`` maps n_phi -> records of a j_pin sweep."""
    out = []
    rows2 = _rows(sweeps[2.0])
    e06 = _at(rows2, 0.6)["eof"]
    out.append(Check(4, "EoF at n_phi = 2, j_pin = 0.6", round(e06, 4), "in [0.69, 0.75]", 0.69 <= e06 <= 0.75))
    jp = np.array([r["parameter"] for r in rows2])
    ev = np.array([r["eof"] for r in rows2])
    drop = None
    for i in range(1, len(jp)):
        if ev[i - 1] >= 0.01 and ev[i] < 0.01:
            drop = i
            break
    ok = drop is not None and 0.80 <= jp[drop] <= 0.90
    out.append(Check(4, "first j_pin with EoF < 0.01 (n_phi = 2)", None if drop is None else float(jp[drop]),
                     "in [0.80, 0.90]", ok))
    after = float(ev[drop]) if drop is not None else float("nan")
    out.append(Check(4, "EoF just above the drop", round(after, 5), "0.003 +- 0.002", abs(after - 0.003) <= 0.002))
    for n_phi in (0.0, 0.5, 1.5, 2.5):
        e = _at(_rows(sweeps[n_phi]), 0.01)["eof"]
        out.append(Check(4, f"EoF at n_phi = {n_phi}, j_pin = 0.01", round(e, 4), ">= 0.95", e >= 0.95))
    e3 = _at(_rows(sweeps[3.0]), 0.01)["eof"]
    out.append(Check(4, "EoF at n_phi = 3, j_pin = 0.01", round(e3, 4), "< 0.5", e3 < 0.5))
    return out


def check_vorticity(result: dict, analytic: float) -> list[Check]:
    bg = result["background"]
    out = [Check(5, "background vorticity (j_pin = 0.1, n_phi = 2)", round(bg, 4), "-0.43 +- 0.02",
                 abs(bg + 0.43) <= 0.02),
           Check(5, "analytic_background(1/16, 1/2, 2)", analytic, "-pi/8", analytic == -math.pi / 8)]
    expected = {1.5: "away", 1.0: "uniform", 0.9: "pins", 0.6: "pins"}
    for run in result["runs"]:
        j = run["spec"]["j_pin"]
        if j not in expected:
            continue
        vals = np.asarray(run["subtracted"]["values"])
        spread = float(vals.max() - vals.min())
        value = f"{run['peak']} (spread {spread:.2e})"
        out.append(Check(5, f"subtracted map at j_pin = {j}", value, expected[j], run["peak"] == expected[j]))
    return out


def check_spinfit(fit) -> list[Check]:
    d = fit if isinstance(fit, dict) else asdict(fit)
    return [
        Check(6, "f_xx_abs", round(d["f_xx_abs"], 5), "0.06309 +- 0.001", abs(d["f_xx_abs"] - 0.06309) <= 0.001),
        Check(6, "f_zz", round(d["f_zz"], 5), "0.2236 +- 0.002", abs(d["f_zz"] - 0.2236) <= 0.002),
        Check(6, "c", round(d["c"], 4), "-13.28 +- 0.01", abs(d["c"] + 13.28) <= 0.01),
        Check(6, "fit residual", d["residual"], "< 1e-3", d["residual"] < 1e-3),
    ]


def check_perturb(bloch: dict, exact: tuple, gaps: dict) -> list[Check]:
    """``bloch`` has r0..rz, theta, phi; ``exact`` is (theta, phi); ``gaps`` maps n_phi -> gap pair."""
    out = []
    r = (bloch["r0"], bloch["rx"], bloch["ry"], bloch["rz"])
    for name, v, ref in zip(("R0", "Rx", "Ry", "Rz"), r, R_REF):
        ok = abs(v - ref) <= 0.01 * abs(ref) if ref else abs(v) <= 0.01 * R_REF[0]
        out.append(Check(7, f"{name} (1e-4 J)", round(v * 1e4, 3), f"{ref * 1e4:.3f} within 1%", ok))
    out.append(Check(7, "theta_pert", round(bloch["theta"], 5), "pi/2 +- 1e-3", abs(bloch["theta"] - math.pi / 2) <= 1e-3))
    out.append(Check(7, "phi_pert", round(bloch["phi"], 4), "0.69 +- 0.01", abs(bloch["phi"] - 0.69) <= 0.01))
    out.append(Check(7, "theta_exact", round(exact[0], 4), "1.57 +- 0.01", abs(exact[0] - 1.57) <= 0.01))
    out.append(Check(7, "phi_exact", round(exact[1], 4), "0.78 +- 0.01", abs(exact[1] - 0.78) <= 0.01))
    for n_phi, ref in H0_GAPS.items():
        g = gaps[n_phi]
        ok = all(abs(a - b) <= 0.01 for a, b in zip(g, ref))
        out.append(Check(7, f"H0 gaps at n_phi = {n_phi}", tuple(round(x, 4) for x in g), f"{ref} +- 0.01", ok))
    return out


def check_finite_u(records) -> list[Check]:
    rows = _rows(records)
    out = []
    for u, bound in ((5.0, 0.01), (10.0, 0.01), (15.0, 0.0155), (19.0, 0.0155)):
        r = _at(rows, u)
        out.append(Check(8, f"|<a1+a2>| at U = {u:g} (n_max {r['n_max']})", round(r["corr_abs"], 5),
                         f"< {bound}", r["corr_abs"] < bound))
    r = _at(rows, 20.0)
    out.append(Check(8, f"|<a1+a2>| at U = 20 (n_max {r['n_max']})", round(r["corr_abs"], 5), "0.453 +- 0.01",
                     abs(r["corr_abs"] - 0.453) <= 0.01))
    return out

"""
Command-line entry point.

Exit codes: 0 on success, 1 if any sweep point failed, 2 on a bad config.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import perturb, recipes, spinfit
from .classical import pinning_energy_profile
from .lattice import LatticeSpec
from .observables import correlation
from .report import run_report, write_report
from .sweep import (THREADS_ENV, ConfigError, EigenSettings, SweepConfig, _clean, ground_state,
                    run_sweep, run_vorticity)


def _read_config(path):
    if path is None:
        return None
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _spec(d, default: LatticeSpec) -> LatticeSpec:
    try:
        return LatticeSpec.from_dict(d) if d is not None else default
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _write_json(out, doc):
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        json.dump(_clean(doc), fh, indent=1)


def cmd_sweep(args) -> int:
    if args.config:
        config = SweepConfig.from_dict(_read_config(args.config))
    elif args.recipe:
        name, _, arg = args.recipe.partition(":")
        if name == "pinning":
            config = recipes.pinning_sweep(float(arg or 2.0))
        elif name in recipes.RECIPES:
            config = recipes.RECIPES[name]()
        else:
            raise ConfigError(f"unknown recipe {args.recipe}")
    else:
        raise ConfigError("sweep needs --config or --recipe")
    result = run_sweep(config, workers=args.threads)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    csv_path = out if out.suffix == ".csv" else out.with_suffix(".csv")
    json_path = out.with_suffix(".json")
    result.write_csv(csv_path)
    doc = result.to_dict()
    doc["kind"] = "sweep"
    _write_json(json_path, doc)
    for r in result.records:
        if r.error:
            print(f"point {r.parameter}: {r.error}", file=sys.stderr)
    return 1 if result.failed else 0


def cmd_vorticity(args) -> int:
    cfg = _read_config(args.config) or {}
    bg_default, specs_default = recipes.vorticity_specs()
    bg = _spec(cfg.get("background"), bg_default)
    specs = [_spec(d, None) for d in cfg["specs"]] if "specs" in cfg else specs_default
    settings = EigenSettings(**cfg.get("eigensolver", {}))
    res = run_vorticity(bg, specs, settings)
    res["kind"] = "vorticity"
    _write_json(args.out, res)
    csv_path = Path(args.out).with_suffix(".csv")
    with open(csv_path, "w") as fh:
        fh.write("j_pin,plaquette,x,y,raw,subtracted\n")
        for run in res["runs"]:
            raw, sub = run["raw"]["values"], run["subtracted"]["values"]
            nx = run["raw"]["nx"]
            for p, (a, b) in enumerate(zip(raw, sub)):
                fh.write(f"{run['spec']['j_pin']!r},{p},{p % nx},{p // nx},{a!r},{b!r}\n")
    return 0


def cmd_spinfit(args) -> int:
    cfg = _read_config(args.config) or {}
    spec = _spec(cfg.get("spec"), replace(recipes.BASE, n_phi=2.0, j_pin=0.6))
    basis, sol = ground_state(spec, EigenSettings(k=4), n_groups=1)
    if len(sol.energies) < 4:
        basis, sol = ground_state(spec, EigenSettings(k=4), n_groups=3)
    f = spinfit.fit(sol.energies[:4])
    f.ground_is_symmetric = spinfit.ground_is_symmetric(correlation(basis, sol.ground, *spec.pins))
    _write_json(args.out, {"kind": "spinfit", "spec": spec.to_dict(),
                           "levels": [float(e) for e in sol.energies[:4]], "fit": asdict(f)})
    return 0


def cmd_perturb(args) -> int:
    cfg = _read_config(args.config) or {}
    spec = _spec(cfg.get("spec"), replace(recipes.BASE, n_phi=0.5, j_pin=0.01))
    n_int = int(cfg.get("n_intermediate", 1))
    be = perturb.effective_hamiltonian(spec, n_intermediate=n_int)
    doc = {"kind": "perturb", "spec": spec.to_dict(), "n_intermediate": n_int,
           "bloch": {k: v for k, v in asdict(be).items() if k != "matrix"}}
    if cfg.get("exact", True):
        theta, phi, e0 = perturb.exact_angles(spec)
        doc["exact"] = [theta, phi]
        doc["exact_E0"] = e0
        doc["pert_E0"] = be.ground_energy()
    gaps = {}
    for n_phi in cfg.get("h0_n_phi", [0.5, 2.0, 1.0, 3.0]):
        gaps[str(float(n_phi))] = list(perturb.h0_structure(replace(spec, n_phi=n_phi, j_pin=0.0)).gaps)
    doc["h0_gaps"] = gaps
    _write_json(args.out, doc)
    return 0


def cmd_classical(args) -> int:
    cfg = _read_config(args.config)
    if cfg is None or "path" not in cfg:
        raise ConfigError("classical needs a config with 'spec' and 'path'")
    spec = _spec(cfg.get("spec"), recipes.BASE)
    prof = pinning_energy_profile(spec, cfg["path"], int(cfg.get("charge", 1)), int(cfg.get("pin", 0)))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out.with_suffix(".csv"), "w") as fh:
        fh.write("x,y,h_delta\n")
        for (x, y), e in zip(prof.positions, prof.energies):
            fh.write(f"{x!r},{y!r},{e!r}\n")
    _write_json(out.with_suffix(".json"), {"kind": "classical", "spec": spec.to_dict(),
                                           "positions": prof.positions, "energies": prof.energies,
                                           "trend": prof.trend})
    return 0


def cmd_report(args) -> int:
    paths = list(args.paths)
    cfg = _read_config(args.config)
    if cfg:
        paths += cfg.get("paths", [])
    rep = run_report(paths)
    write_report(rep, args.out)
    for c in rep["checks"]:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['criterion']}: {c['name']} = {c['value']} (target {c['target']})")
    for w in rep["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return 1 if rep["errors"] else 0


COMMANDS = {
    "sweep": cmd_sweep,
    "vorticity": cmd_vorticity,
    "spinfit": cmd_spinfit,
    "perturb": cmd_perturb,
    "classical": cmd_classical,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vortex-ed", description="Pinned-vortex exact diagonalisation")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--out", required=True, help="output path")
        s.add_argument("--threads", type=int, default=None,
                       help=f"worker processes (default: ${THREADS_ENV} or 1)")
        if name == "sweep":
            s.add_argument("--recipe", help="flux | finite_u | pinning:<n_phi>")
        if name == "report":
            s.add_argument("paths", nargs="*", help="result JSON files")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        os.environ[THREADS_ENV] = str(args.threads)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

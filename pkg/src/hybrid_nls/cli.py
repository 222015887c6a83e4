"""Command-line front end: solve, sweep, baseline, and verify.

Configuration comes from an optional flat JSON file (``--config``,
with a ``"command"`` field) merged with command-line flags; flags win.
Exit codes are uniform across commands: 0 success, 1 numeric failure
(non-convergence, failed sweep rows, failed verification criteria),
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import _svgplot, analysis
from .energy import HybridParams, total_field
from .solver import (GroundStateReport, SolverConfig, solve_hybrid,
                     solve_planar, solve_single)
from .verify import run_suite

__all__ = ["RunConfig", "main", "cmd_solve", "cmd_sweep", "cmd_baseline",
           "cmd_verify"]

SCHEMA_VERSION = 1

_COMMANDS = ("solve", "sweep", "baseline", "verify")
_FORMATS = ("json", "csv", "svg")
_SWEEP_MODES = ("sigma2", "sigma_common", "beta", "mu")

_DEFAULTS = {
    "p1": 3.0, "p2": 3.0, "sigma1": 0.0, "sigma2": 0.0,
    "beta": 1.0, "mu": 1.0,
    "formats": "json,csv", "jobs": 0, "fast": False,
    "mode": "sigma2", "mu_relative": None, "values": None,
    "p": None, "mustar": None,
}


class UsageError(ValueError):
    """Configuration problem: maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    """Everything one command invocation needs, fully resolved."""

    command: str
    params: HybridParams
    solver: SolverConfig
    out_dir: str
    formats: tuple[str, ...]
    jobs: int
    fast: bool
    mode: str
    values: tuple[float, ...] | None
    mu_relative: float | None
    p_list: tuple[float, ...] | None
    mustar_pairs: tuple[tuple[float, float], ...] | None


# --------------------------------------------------------------------------
# configuration assembly


def _parse_floats(text, what: str) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [s for s in str(text).split(",") if s.strip()]
    try:
        return tuple(float(x) for x in items)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"could not parse {what}: {exc}") from None


def _parse_pairs(text) -> tuple[tuple[float, float], ...]:
    if isinstance(text, (list, tuple)):
        chunks = [str(c) for c in text]
    else:
        chunks = [c for c in str(text).split(",") if c.strip()]
    pairs = []
    for chunk in chunks:
        halves = chunk.split(":")
        if len(halves) != 2:
            raise UsageError(f"pair {chunk!r} is not of the form p1:p2")
        try:
            pairs.append((float(halves[0]), float(halves[1])))
        except ValueError as exc:
            raise UsageError(f"could not parse pair {chunk!r}: {exc}") from None
    return tuple(pairs)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hybrid-nls",
        description="Ground states of two nonlinear planes coupled "
                    "through a point interaction.")
    ap.add_argument("command", nargs="?", choices=_COMMANDS,
                    help="solve | sweep | baseline | verify "
                         "(may also come from --config)")
    ap.add_argument("--config", help="flat JSON configuration file")
    for name in ("p1", "p2", "sigma1", "sigma2", "beta", "mu",
                 "R", "grading", "grad-tol", "mu-relative"):
        ap.add_argument(f"--{name}", type=float, default=None)
    for name in ("N", "max-iters", "seed", "jobs"):
        ap.add_argument(f"--{name}", type=int, default=None)
    ap.add_argument("--starts", default=None,
                    help="comma-separated descent start weights")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--formats", default=None,
                    help="comma-separated subset of json,csv,svg")
    ap.add_argument("--fast", action="store_const", const=True, default=None,
                    help="verify on a shrunken grid (documented tolerances)")
    ap.add_argument("--mode", choices=_SWEEP_MODES, default=None,
                    help="sweep parameter")
    ap.add_argument("--values", default=None,
                    help="comma-separated sweep values, strictly increasing")
    ap.add_argument("--p", default=None,
                    help="comma-separated powers for baseline")
    ap.add_argument("--mustar", default=None,
                    help="comma-separated p1:p2 pairs for baseline")
    return ap


def _merged_options(args: argparse.Namespace) -> dict:
    merged = dict(_DEFAULTS)
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"could not read config file: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a flat JSON object")
        merged.update(loaded)
    on_cli = {k: v for k, v in vars(args).items()
              if v is not None and k != "config"}
    merged.update(on_cli)
    if not merged.get("command"):
        raise UsageError("no command given (argument or \"command\" in the "
                         "config file); expected one of " + ", ".join(_COMMANDS))
    if merged["command"] not in _COMMANDS:
        raise UsageError(f"unknown command {merged['command']!r}")
    return merged


def _resolve(merged: dict) -> RunConfig:
    solver = SolverConfig()
    overrides = {}
    for key, field in (("R", "R"), ("N", "N"), ("grading", "grading"),
                       ("grad_tol", "grad_tol"), ("max_iters", "max_iters"),
                       ("seed", "seed")):
        if merged.get(key) is not None:
            overrides[field] = merged[key]
    if merged.get("starts") is not None:
        overrides["starts"] = _parse_floats(merged["starts"], "--starts")
    try:
        solver = dataclasses.replace(solver, **overrides)
        params = HybridParams(merged["p1"], merged["p2"], merged["sigma1"],
                              merged["sigma2"], merged["beta"], merged["mu"])
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None

    fmts = merged["formats"]
    fmts = tuple(f for f in (fmts if isinstance(fmts, (list, tuple))
                             else str(fmts).split(",")) if f)
    bad = set(fmts) - set(_FORMATS)
    if bad:
        raise UsageError(f"unknown formats {sorted(bad)}; "
                         f"choose from {','.join(_FORMATS)}")

    out_dir = merged.get("out") or os.environ.get("HYBRID_NLS_OUT") or "."
    jobs = int(merged["jobs"]) or (os.cpu_count() or 1)
    if jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {jobs}")

    values = None
    if merged.get("values") is not None:
        values = _parse_floats(merged["values"], "--values")
    p_list = None
    if merged.get("p") is not None:
        p_list = _parse_floats(merged["p"], "--p")
    pairs = None
    if merged.get("mustar") is not None:
        pairs = _parse_pairs(merged["mustar"])

    return RunConfig(
        command=merged["command"], params=params, solver=solver,
        out_dir=out_dir, formats=fmts, jobs=jobs, fast=bool(merged["fast"]),
        mode=merged["mode"], values=values,
        mu_relative=merged.get("mu_relative"), p_list=p_list,
        mustar_pairs=pairs)


# --------------------------------------------------------------------------
# output helpers


def _write_json(rc: RunConfig, name: str, payload: dict) -> None:
    path = os.path.join(rc.out_dir, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _write_csv(rc: RunConfig, name: str, header: list[str],
               rows: list[list]) -> None:
    path = os.path.join(rc.out_dir, name)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(
                f"{v:.17g}" if isinstance(v, float) else str(v)
                for v in row) + "\n")


def _write_svg(rc: RunConfig, name: str, svg_text: str) -> None:
    with open(os.path.join(rc.out_dir, name), "w", encoding="utf-8") as fh:
        fh.write(svg_text)


def _params_dict(P: HybridParams) -> dict:
    return dataclasses.asdict(P)


def _solver_dict(cfg: SolverConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["starts"] = list(d["starts"])
    return d


def _mass_carrier(r: GroundStateReport, mu: float) -> str:
    if r.mass2 <= 1e-6 * mu:
        return "plane1"
    if r.mass1 <= 1e-6 * mu:
        return "plane2"
    return "both"


# --------------------------------------------------------------------------
# commands


def _apply_mu_relative(rc: RunConfig) -> RunConfig:
    """Rescale the target mass to a multiple of the critical mass."""
    if rc.mu_relative is None:
        return rc
    if rc.mu_relative <= 0.0:
        raise UsageError(f"--mu-relative must be > 0, got {rc.mu_relative}")
    if rc.command == "sweep" and rc.mode == "mu":
        raise UsageError("--mu-relative cannot combine with a mass sweep; "
                         "give absolute --values instead")
    P = rc.params
    if P.p1 == P.p2:
        raise UsageError("--mu-relative needs distinct powers p1 != p2 "
                         "(the critical mass is defined by their crossing)")
    mustar = analysis.critical_mass(P.p1, P.p2, rc.solver)
    return dataclasses.replace(
        rc, params=dataclasses.replace(P, mu=rc.mu_relative * mustar))


def cmd_solve(rc: RunConfig) -> int:
    rc = _apply_mu_relative(rc)
    report = solve_hybrid(rc.params, rc.solver)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "command": "solve",
        "params": _params_dict(rc.params),
        "solver": _solver_dict(rc.solver),
        "mass_carrier": _mass_carrier(report, rc.params.mu),
        **report.as_dict(),
    }
    if "json" in rc.formats:
        _write_json(rc, "report.json", payload)
    U = report.state
    grid = U.grid
    t1 = total_field(U.u1).values
    t2 = total_field(U.u2).values
    inner = slice(1, grid.n_nodes - 1)  # origin kernel value is singular
    if "csv" in rc.formats:
        rows = [[float(r), float(a), float(b), float(c), float(d)]
                for r, a, b, c, d in zip(
                    grid.r[inner], t1[inner], t2[inner],
                    U.u1.phi.values[inner], U.u2.phi.values[inner])]
        _write_csv(rc, "profiles.csv", ["r", "u1", "u2", "phi1", "phi2"], rows)
    if "svg" in rc.formats:
        svg = _svgplot.render_lines(
            [("plane 1", grid.r[inner], t1[inner]),
             ("plane 2", grid.r[inner], t2[inner])],
            title=(f"ground-state profiles  p=({rc.params.p1:g},{rc.params.p2:g})"
                   f"  sigma=({rc.params.sigma1:g},{rc.params.sigma2:g})"
                   f"  beta={rc.params.beta:g}  mu={rc.params.mu:g}"),
            xlabel="r", ylabel="u(r)", ylog=True)
        _write_svg(rc, "profiles.svg", svg)
    print(f"energy {report.energy:.12g}  mass ({report.mass1:.6g}, "
          f"{report.mass2:.6g})  charges ({report.q1:.6g}, {report.q2:.6g})  "
          f"omega {report.omega:.6g}  converged {report.converged}")
    return 0 if report.converged else 1


def _sweep_params(rc: RunConfig, value: float) -> HybridParams:
    P = rc.params
    if rc.mode == "sigma2":
        return dataclasses.replace(P, sigma2=value)
    if rc.mode == "sigma_common":
        return dataclasses.replace(P, sigma1=value, sigma2=value)
    if rc.mode == "beta":
        return dataclasses.replace(P, beta=value)
    return dataclasses.replace(P, mu=value)


def _sweep_references(rc: RunConfig) -> dict:
    refs = {}
    P = rc.params
    if rc.mode == "sigma2" and P.p1 == P.p2:
        refs["single_plane_1"] = solve_single(
            P.p1, P.sigma1, P.mu, rc.solver).energy
    if rc.mode in ("sigma_common", "mu") and P.p1 != P.p2:
        lo, hi = sorted((P.p1, P.p2))
        refs["critical_mass"] = analysis.critical_mass(lo, hi, rc.solver)
    if rc.mode == "sigma_common":
        for tag, p in (("free_plane_1", P.p1), ("free_plane_2", P.p2)):
            rho = analysis.rho(p, rc.solver)
            refs[tag] = -rho * P.mu ** (2.0 / (4.0 - p))
    if rc.mode == "beta":
        refs["uncoupled"] = solve_hybrid(
            dataclasses.replace(P, beta=0.0), rc.solver).energy
    return refs


def _monotone_verdict(xs: list[float]) -> str:
    if all(b >= a for a, b in zip(xs, xs[1:])):
        return "nondecreasing"
    if all(b <= a for a, b in zip(xs, xs[1:])):
        return "nonincreasing"
    return "none"


def cmd_sweep(rc: RunConfig) -> int:
    rc = _apply_mu_relative(rc)
    if not rc.values:
        raise UsageError("sweep needs a nonempty --values list")
    if any(b <= a for a, b in zip(rc.values, rc.values[1:])):
        raise UsageError("sweep values must be strictly increasing")
    try:
        plist = [_sweep_params(rc, v) for v in rc.values]
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    rows: list[dict | None] = [None] * len(plist)
    errors: list[dict] = []

    def run_one(k: int):
        return k, solve_hybrid(plist[k], rc.solver)

    with concurrent.futures.ThreadPoolExecutor(max_workers=rc.jobs) as pool:
        futures = [pool.submit(run_one, k) for k in range(len(plist))]
        for fut in concurrent.futures.as_completed(futures):
            try:
                k, rep = fut.result()
            except (RuntimeError, ValueError, ArithmeticError) as exc:
                k = futures.index(fut)
                errors.append({"value": rc.values[k], "error": str(exc)})
                continue
            rows[k] = {
                "value": rc.values[k], "energy": rep.energy,
                "mass1": rep.mass1, "mass2": rep.mass2,
                "q1": rep.q1, "q2": rep.q2, "omega": rep.omega,
                "converged": rep.converged,
            }

    done = [r for r in rows if r is not None]
    if "csv" in rc.formats:
        _write_csv(rc, "sweep.csv", list(analysis.SweepTable.COLUMNS),
                   [[r[c] for c in analysis.SweepTable.COLUMNS] for r in done])

    refs = {}
    try:
        refs = _sweep_references(rc)
    except (RuntimeError, ValueError) as exc:
        errors.append({"value": None, "error": f"references: {exc}"})

    mu_of = (lambda r: r["value"]) if rc.mode == "mu" else (
        lambda r: rc.params.mu)
    fracs1 = [r["mass1"] / mu_of(r) for r in done]
    verdicts: dict[str, object] = {
        "mass1_fraction_monotone": _monotone_verdict(fracs1),
        "all_converged": bool(done) and all(r["converged"] for r in done),
    }
    if done:
        last = done[-1]
        fr1 = last["mass1"] / mu_of(last)
        verdicts["concentration"] = ("plane1" if fr1 >= 0.95 else
                                     "plane2" if fr1 <= 0.05 else "mixed")
    if done and rc.mode == "sigma2" and "single_plane_1" in refs:
        ref = refs["single_plane_1"]
        verdicts["limit_proximity"] = abs(done[-1]["energy"] - ref) / abs(ref)
    if done and rc.mode == "sigma_common":
        tag = ("free_plane_1" if verdicts.get("concentration") == "plane1"
               else "free_plane_2")
        if tag in refs:
            verdicts["limit_proximity"] = (
                abs(done[-1]["energy"] - refs[tag]) / abs(refs[tag]))
    if rc.mode == "beta" and "uncoupled" in refs:
        gaps = [refs["uncoupled"] - r["energy"] for r in done]
        verdicts["coupling_gap_monotone"] = _monotone_verdict(gaps)
        verdicts["coupling_gap_positive"] = all(g > 0.0 for g in gaps)

    if "json" in rc.formats:
        _write_json(rc, "summary.json", {
            "schema_version": SCHEMA_VERSION,
            "command": "sweep",
            "mode": rc.mode,
            "params": _params_dict(rc.params),
            "solver": _solver_dict(rc.solver),
            "values": list(rc.values),
            "rows": done,
            "references": refs,
            "verdicts": verdicts,
            "errors": errors,
        })
    if "svg" in rc.formats and done:
        xs = [r["value"] for r in done]
        svg = _svgplot.render_lines(
            [("plane-1 fraction", xs, [r["mass1"] / mu_of(r) for r in done]),
             ("plane-2 fraction", xs, [r["mass2"] / mu_of(r) for r in done])],
            title=f"mass split along {rc.mode}", xlabel=rc.mode,
            ylabel="mass fraction")
        _write_svg(rc, "sweep.svg", svg)

    for r in done:
        print(f"{rc.mode}={r['value']:g}: energy {r['energy']:.9g}  "
              f"mass1 {r['mass1']:.6g}  mass2 {r['mass2']:.6g}  "
              f"converged {r['converged']}")
    for e in errors:
        print(f"row {e['value']}: failed: {e['error']}", file=sys.stderr)
    ok = not errors and bool(done) and all(r["converged"] for r in done)
    return 0 if ok else 1


def cmd_baseline(rc: RunConfig) -> int:
    if not rc.p_list and not rc.mustar_pairs:
        raise UsageError("baseline needs --p and/or --mustar")
    payload: dict = {
        "schema_version": SCHEMA_VERSION,
        "command": "baseline",
        "solver": _solver_dict(rc.solver),
        "rho": {},
        "reference_mass": {},
        "scaling": {},
        "mu_star": {},
    }
    for p in rc.p_list or ():
        if not 2.0 < p < 4.0:
            raise UsageError(
                f"p={p:g} outside the mass-subcritical range (2, 4)")
        detail = analysis.rho_detail(p, rc.solver)
        key = f"{p:g}"
        payload["rho"][key] = detail.value
        payload["reference_mass"][key] = detail.reference_mass
        mus = [f * detail.reference_mass for f in (0.5, 1.0, 2.0, 4.0)]
        energies = [solve_planar(p, m, rc.solver).energy for m in mus]
        slope = float(np.polyfit(np.log(mus),
                                 np.log(np.abs(energies)), 1)[0])
        expected = 2.0 / (4.0 - p)
        payload["scaling"][key] = {
            "fitted_exponent": slope,
            "expected_exponent": expected,
            "rel_err": abs(slope - expected) / expected,
        }
    for p1, p2 in rc.mustar_pairs or ():
        try:
            mustar = analysis.critical_mass(p1, p2, rc.solver)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        r1 = analysis.rho(p1, rc.solver)
        r2 = analysis.rho(p2, rc.solver)
        e1 = -r1 * mustar ** (2.0 / (4.0 - p1))
        e2 = -r2 * mustar ** (2.0 / (4.0 - p2))
        gap = abs(e1 - e2) / max(abs(e1), abs(e2))
        payload["mu_star"][f"{p1:g}:{p2:g}"] = {
            "value": mustar,
            "endpoint_energies": [e1, e2],
            "root_rel_gap": gap,
            "root_property_ok": gap <= 1e-6,
        }
    if "json" in rc.formats:
        _write_json(rc, "baseline.json", payload)
    for key, val in payload["rho"].items():
        print(f"rho({key}) = {val:.9e}  (reference mass "
              f"{payload['reference_mass'][key]:g}, scaling exponent "
              f"{payload['scaling'][key]['fitted_exponent']:.5f})")
    for key, entry in payload["mu_star"].items():
        print(f"mu*({key}) = {entry['value']:.6g}  root gap "
              f"{entry['root_rel_gap']:.2e}")
    bad_fit = any(s["rel_err"] > 0.02 for s in payload["scaling"].values())
    bad_root = any(not e["root_property_ok"]
                   for e in payload["mu_star"].values())
    return 1 if (bad_fit or bad_root) else 0


def cmd_verify(rc: RunConfig) -> int:
    report = run_suite(fast=rc.fast)
    for line in report.lines():
        print(line)
    if "json" in rc.formats:
        _write_json(rc, "verify.json",
                    {"schema_version": SCHEMA_VERSION, "command": "verify",
                     **report.as_dict()})
    if report.all_passed:
        return 0
    print("failed criteria: "
          + ", ".join(str(n) for n in report.failed_numbers), file=sys.stderr)
    return 1


# --------------------------------------------------------------------------
# entry point


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        rc = _resolve(_merged_options(args))
        os.makedirs(rc.out_dir, exist_ok=True)
        handler = {"solve": cmd_solve, "sweep": cmd_sweep,
                   "baseline": cmd_baseline, "verify": cmd_verify}[rc.command]
        return handler(rc)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    mfelab [--config FILE] [--output-dir DIR] [-v] {solve,branch,verify,symmetry} ...

Exit status: 0 success, 1 configuration or input error, 2 numerical failure
(divergence, or a failed verification).
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import mfe_core as core
from . import solver as sv
from . import stereographic as st
from . import symmetry as sy
from .config import ConfigError, RunConfig, load_config, parse_alpha
from .fieldio import FieldFileError, read_field, write_field
from .records import SCHEMA_VERSION, RecordWriter, dumps, write_csv
from .sphere_grid import (SphereField, SphereGrid, conormal_flux, hemisphere_integral,
                          laplace_beltrami)

log = logging.getLogger("mfelab")

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2
TRIVIAL_SUP = 1e-6


class InputError(Exception):
    """Missing or unreadable input file."""


def _header(kind: str, cfg: RunConfig, alpha) -> dict:
    g = cfg.grid
    return {
        "schema": f"mfelab.{kind}",
        "schema_version": SCHEMA_VERSION,
        "grid": {"L": g.L, "n_theta": g.n_theta, "n_phi": g.n_phi},
        "alpha": alpha,
        "tolerances": {"newton_tol": cfg.solver.newton_tol, "step_tol": cfg.solver.step_tol,
                       "kernel_tol": cfg.solver.kernel_tol, "max_iter": cfg.solver.max_iter},
    }


def _grid(cfg: RunConfig) -> SphereGrid:
    return SphereGrid(cfg.grid.L, cfg.grid.n_theta, cfg.grid.n_phi)


def _params(cfg: RunConfig, alpha: float) -> core.MfeParameters:
    s = cfg.solver
    return core.MfeParameters(alpha, s.newton_tol, s.max_iter, s.step_tol)


def _load(path) -> tuple[SphereField, dict]:
    if not path:
        raise InputError("no field file given")
    p = Path(path)
    if not p.is_file():
        raise InputError(f"field file not found: {p}")
    return read_field(p)


# -- solve ----------------------------------------------------------------------------

def _initial(cfg: RunConfig, grid: SphereGrid, seed: int) -> SphereField:
    s = cfg.solve
    if s.initial == "random":
        return sv.random_initial_guess(grid, seed)
    if s.initial == "zero":
        return SphereField.zeros(grid)
    if s.initial == "constant":
        return SphereField.constant(grid, s.initial_value)
    u, _ = _load(s.initial_file)
    return u if u.grid == grid else SphereField.from_function(grid, u)


def _symmetry_summary(u: SphereField, alpha: float, n_axes: int):
    rep = sy.symmetry_report(u, alpha, n_axes=n_axes)
    return rep.summary(), rep


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    s = cfg.solve
    grid = _grid(cfg)
    params = _params(cfg, s.alpha)
    seeds = list(range(s.first_seed, s.first_seed + s.seeds))
    known = [SphereField.zeros(grid)] if s.deflate else []
    if s.initial == "random":
        outcomes = sv.multi_start(s.alpha, seeds, grid, params, known, s.workers,
                                  cfg.solver.kernel_tol)
    else:
        outcomes = []
        for seed in seeds:
            u0 = _initial(cfg, grid, seed)
            if known:
                outcomes.append(sv.deflated_solve(u0, s.alpha, known, params,
                                                  kernel_tol=cfg.solver.kernel_tol))
            else:
                outcomes.append(sv.solve_newton(u0, s.alpha, params,
                                                kernel_tol=cfg.solver.kernel_tol))
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    n_flagged = 0
    with RecordWriter(out / "solve.jsonl") as w:
        for seed, o in zip(seeds, outcomes):
            rec = _header("solve", cfg, s.alpha)
            rec.update({"seed": seed, "initial": s.initial, "deflate": s.deflate})
            rec.update(o.summary())
            rec["trivial"] = bool(o.solution.sup_norm < TRIVIAL_SUP)
            if o.converged:
                name = f"field_seed{seed:04d}.sphf"
                write_field(out / name, o.solution,
                            {"alpha": s.alpha, "seed": seed, "residual_norm": o.residual_norm})
                rec["field_file"] = name
                if s.symmetry:
                    summ, rep = _symmetry_summary(o.solution, s.alpha, s.n_axes)
                    rec["symmetry"] = summ
                    with RecordWriter(out / f"symmetry_seed{seed:04d}.jsonl") as sw:
                        for r in rep.records():
                            sw.write(r)
                    # a nontrivial solution that passes the (H) check is a rigidity witness
                    rec["flag"] = (not rec["trivial"]) and summ["h_holds"]
                    n_flagged += int(rec["flag"])
            w.write(rec)
            rows.append((seed, int(o.converged), o.iterations, o.residual_norm,
                         o.solution.sup_norm))
    write_csv(out / "solve.csv", ["seed", "converged", "iterations", "residual_norm", "sup_norm"],
              rows)
    n_conv = sum(o.converged for o in outcomes)
    log.info("solve: %d/%d converged, %d nontrivial (H)-satisfying", n_conv, len(outcomes),
             n_flagged)
    return EXIT_OK if n_conv == len(outcomes) else EXIT_FAILED


# -- branch ---------------------------------------------------------------------------

def _branch_seed(cfg: RunConfig, grid: SphereGrid) -> sv.SolveOutcome:
    b = cfg.branch
    params = _params(cfg, b.alpha_start)
    if b.seed == "trivial":
        u0 = SphereField.zeros(grid)
    elif b.seed == "axisymmetric":
        prof = sv.axisymmetric_solve(b.alpha_start,
                                     lambda t: b.seed_amplitude * 0.5 * (3 * t * t - 1))
        u0 = prof.lift(grid)
    else:
        u, _ = _load(b.seed_file)
        u0 = u if u.grid == grid else SphereField.from_function(grid, u)
    return sv.solve_newton(u0, b.alpha_start, params, kernel_tol=cfg.solver.kernel_tol)


def cmd_branch(cfg: RunConfig, out: Path) -> int:
    b = cfg.branch
    if b.alpha_start == b.alpha_end:
        raise ConfigError("branch.alpha_end: empty alpha range")
    grid = _grid(cfg)
    seed = _branch_seed(cfg, grid)
    if not seed.converged:
        log.error("branch seed did not converge: %s", seed.message)
        return EXIT_FAILED
    step = sv.StepControl(b.initial_step, b.max_step, b.min_step, b.max_points)
    branch = sv.continue_branch(seed, b.alpha_end, step, _params(cfg, b.alpha_start))
    out.mkdir(parents=True, exist_ok=True)
    fdir = out / "branch_fields"
    fdir.mkdir(exist_ok=True)
    rows = []
    with RecordWriter(out / "branch.jsonl") as w:
        for i, p in enumerate(branch.points):
            name = f"branch_fields/point_{i:04d}.sphf"
            write_field(out / name, p.solution, {"alpha": p.alpha, "index": i})
            if p.solution.sup_norm < TRIVIAL_SUP:
                dev, axis = 0.0, None
            else:
                ar = sy.detect_axis(p.solution)
                dev, axis = ar.deviation, ar.axis
            rec = _header("branch", cfg, p.alpha)
            rec.update({"branch_id": branch.branch_id, "index": i,
                        "residual_norm": p.residual_norm, "sup_norm": p.solution.sup_norm,
                        "kernel_dim": p.kernel_dim,
                        "smallest_singular_value": p.smallest_singular_value,
                        "symmetry": {"axis": axis, "axis_deviation": dev},
                        "field_file": name})
            w.write(rec)
            rows.append((p.alpha, p.solution.sup_norm, p.residual_norm, p.kernel_dim,
                         p.smallest_singular_value, dev))
        w.write({"schema": "mfelab.branch_end", "schema_version": SCHEMA_VERSION,
                 "branch_id": branch.branch_id, "stop_reason": branch.stop_reason,
                 "events": [e.as_dict() for e in branch.events]})
    write_csv(out / "branch.csv", ["alpha", "sup_norm", "residual_norm", "kernel_dim",
                                   "smallest_singular_value", "axis_deviation"], rows)
    table = [(e.alpha, e.kernel_dim, e.smallest_singular_value, f"continuation-{e.kind}")
             for e in branch.events]
    lo, hi = sorted([b.alpha_start, b.alpha_end])
    if b.seed == "trivial":
        n = int(round((hi - lo) / b.scan_step)) + 1
        scan = sv.bifurcation_scan(lo, hi, max(n, 2), grid=grid)
        table += [(a, k, s, "scan") for a, k, s in scan.zeros]
        write_csv(out / "scan.csv", ["alpha", "smallest_singular_value"], scan.samples())
    write_csv(out / "singular.csv", ["alpha", "kernel_dim", "smallest_singular_value", "source"],
              sorted(table))
    log.info("branch: %d points, stop: %s, %d events", len(branch), branch.stop_reason,
             len(branch.events))
    return EXIT_OK if len(branch) > 1 else EXIT_FAILED


# -- verify -----------------------------------------------------------------------------

class _Report:
    def __init__(self):
        self.rows = []

    def check(self, name: str, fn, threshold: float, mode: str = "below"):
        t0 = time.perf_counter()
        value = float(fn())
        dt = time.perf_counter() - t0
        ok = value < threshold if mode == "below" else value > threshold
        self.rows.append({"invariant": name, "value": value, "threshold": threshold,
                          "mode": mode, "passed": bool(ok), "runtime_s": dt})
        return ok

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.rows)


def _verify_field(rep: _Report, u: SphereField, alpha: float, n_axes: int, solution: bool):
    w = st.chain_to_w(u, alpha)
    ys = st.planar_samples(100.0)
    r2 = np.sum(ys * ys, axis=1)
    if not solution:
        rep.check("chain_exp_w_pointwise",
                  lambda: np.max(np.abs(w.exp(ys) / ((8 / alpha) * np.exp(w.u_bar(ys))
                                                     / (1 + r2) ** 2) - 1)), 1e-12)
    rep.check("total_mass_8pi_over_alpha",
              lambda: abs(st.total_mass(w) - 8 * np.pi / alpha) / (8 * np.pi / alpha),
              1e-8 if not solution else 1e-6)
    rep.check("planar_residual", lambda: st.planar_residual_check(w), 1e-6)
    axes = sy.fibonacci_axes(n_axes)
    rep.check("hemisphere_identity",
              lambda: max(abs(sy.hemisphere_identity_defect(u, alpha, y)) for y in axes), 1e-5)
    probe = sv.random_initial_guess(u.grid, 7, degree=12, scale=1.0)
    lap = laplace_beltrami(probe)
    rep.check("green_step_hemispheres",
              lambda: max(abs(hemisphere_integral(lap, y) + conormal_flux(probe, y))
                          for y in axes[:50]), 1e-6)
    rep.check("residual_sup", lambda: core.residual(u, alpha).sup_norm, 1e-8)
    rep.check("normalization", lambda: abs(np.expm1(core.log_mass(u))), 1e-12)


def _verify_caps(rep: _Report):
    for lam in (0.5, 1.0, 2.0, 5.0):
        v1, v2 = st.complementary_caps(lam)
        rep.check(f"sci_caps_lambda_{lam:g}",
                  lambda: abs(st.sci_check(v1, v2, st.Disk()).mass - 4 * np.pi), 1e-6)
    for lam in (0.5, 2.0, 5.0, 1.0):
        for d in (0.01, 0.05, 0.1, 0.2, 0.5):
            v1, v2 = st.perturbed_caps(lam, d)
            rep.check(f"sci_perturbed_lambda_{lam:g}_delta_{d:g}",
                      lambda: st.sci_check(v1, v2, st.Disk()).mass - 4 * np.pi, 0.0, "above")
    v1, v2 = st.complementary_caps(2.0)
    rep.check("sci_gate_small_disk",
              lambda: float(st.sci_check(v1, v2, st.Disk(radius=0.1)).verdict == "inapplicable"),
              0.5, "above")


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    v = cfg.verify
    rep = _Report()
    alpha = v.alpha
    if v.case == "zero-field":
        _verify_field(rep, SphereField.zeros(_grid(cfg)), alpha, v.n_axes, solution=False)
    elif v.case == "caps":
        _verify_caps(rep)
    else:
        try:
            u, meta = _load(v.field_file)
        except FieldFileError as exc:
            raise InputError(f"{v.field_file}: {exc}") from exc
        alpha = float(meta.get("alpha", alpha))
        _verify_field(rep, u, alpha, v.n_axes, solution=True)
    out.mkdir(parents=True, exist_ok=True)
    head = _header("verify", cfg, alpha)
    head.update({"case": v.case, "passed": rep.passed, "checks": rep.rows})
    (out / "verify.json").write_text(dumps(head) + "\n", encoding="utf-8")
    write_csv(out / "verify.csv", ["invariant", "value", "threshold", "passed"],
              [(r["invariant"], r["value"], r["threshold"], int(r["passed"])) for r in rep.rows])
    for r in rep.rows:
        log.info("%-40s %s  value=%.3e", r["invariant"], "PASS" if r["passed"] else "FAIL",
                 r["value"])
    return EXIT_OK if rep.passed else EXIT_FAILED


# -- symmetry ---------------------------------------------------------------------------

def cmd_symmetry(cfg: RunConfig, out: Path) -> int:
    s = cfg.symmetry
    try:
        u, meta = _load(s.field_file)
    except FieldFileError as exc:
        raise InputError(f"{s.field_file}: {exc}") from exc
    alpha = s.alpha if s.alpha is not None else meta.get("alpha")
    rep = sy.symmetry_report(u, alpha, n_axes=s.n_axes, workers=s.workers)
    out.mkdir(parents=True, exist_ok=True)
    with RecordWriter(out / "symmetry.jsonl") as w:
        head = _header("symmetry", cfg, alpha)
        head.update(rep.summary())
        w.write(head)
        for r in rep.records():
            w.write(r)
    write_csv(out / "symmetry_axes.csv", ["x", "y", "z", "class", "n_zeros"],
              [(*a.direction, a.cls, len(a.zeros)) for a in rep.axes])
    return EXIT_OK


# -- entry point ------------------------------------------------------------------------

COMMANDS = {"solve": cmd_solve, "branch": cmd_branch, "verify": cmd_verify,
            "symmetry": cmd_symmetry}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mfelab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mfelab {__version__}")
    p.add_argument("--config", help="YAML configuration file")
    p.add_argument("--output-dir", help="output directory (overrides $MFELAB_OUTPUT_DIR)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="Newton solves from seeded or fixed initial guesses")
    s.add_argument("--alpha", type=str)
    s.add_argument("--seeds", type=int, help="number of seeded starts")
    s.add_argument("--first-seed", type=int)
    s.add_argument("--initial", choices=["random", "zero", "constant", "file"])
    s.add_argument("--initial-value", type=float)
    s.add_argument("--initial-file")
    s.add_argument("--deflate", action="store_true", default=None,
                   help="deflate the trivial solution")
    s.add_argument("--workers", type=int)
    s.add_argument("--no-symmetry", dest="symmetry", action="store_false", default=None)
    s.add_argument("--n-axes", type=int)

    b = sub.add_parser("branch", help="pseudo-arclength continuation and singular values")
    b.add_argument("--alpha-start", type=str)
    b.add_argument("--alpha-end", type=str)
    b.add_argument("--seed", choices=["trivial", "axisymmetric", "file"])
    b.add_argument("--seed-amplitude", type=float)
    b.add_argument("--seed-file")
    b.add_argument("--initial-step", type=float)
    b.add_argument("--max-step", type=float)
    b.add_argument("--min-step", type=float)
    b.add_argument("--max-points", type=int)
    b.add_argument("--scan-step", type=float)

    v = sub.add_parser("verify", help="identity and inequality checks")
    v.add_argument("--case", choices=["zero-field", "caps", "solution", "file"])
    v.add_argument("--alpha", type=str)
    v.add_argument("--field-file")
    v.add_argument("--n-axes", type=int)

    y = sub.add_parser("symmetry", help="symmetry report for a field file")
    y.add_argument("--field-file")
    y.add_argument("--alpha", type=str)
    y.add_argument("--n-axes", type=int)
    y.add_argument("--workers", type=int)
    return p


_SKIP = {"command", "config", "output_dir", "verbose"}


def _overrides(args) -> dict:
    return {f"{args.command}.{k}": val for k, val in vars(args).items()
            if k not in _SKIP and val is not None}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ov = _overrides(args)
        for key in list(ov):
            if key.split(".")[-1] in ("alpha", "alpha_start", "alpha_end"):
                ov[key] = parse_alpha(ov[key])
        cfg = load_config(args.config, ov)
        out = cfg.resolved_output_dir(args.output_dir)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, InputError) as exc:
        print(f"mfelab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 solver/compute error,
3 verdict or property failure. Errors print one line ``TAG: message`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import config as cfgmod
from . import core, harness, limits, metrics, snapshots, validate
from .core import Field
from .errors import ConfigError, DomainError, InvalidGrid, StiffPressError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERDICT = 0, 1, 2, 3
COMMANDS = ("run", "sweep", "metrics", "validate", "appendix")

log = logging.getLogger("stiffpress")


@dataclass
class RunManifest:
    command: str
    config: Optional[Path]
    out: Path
    overrides: list[str] = field(default_factory=list)
    seed: int = 0
    threads: int = 1
    input: Optional[Path] = None

    def load(self) -> dict:
        if self.config is None:
            return cfgmod.load_text("", self.overrides) if self.overrides else {}
        return cfgmod.load(self.config, self.overrides)


def _tag_line(tag: str, msg: str) -> None:
    print(f"{tag}: {' '.join(str(msg).split())}", file=sys.stderr)


def _prepare_out(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"output directory {path} is not writable: {exc}") from None
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")
    return path


def _need_config(m: RunManifest, doc: dict) -> None:
    if not doc:
        raise ConfigError(f"command {m.command!r} needs --config")


# --- commands ----------------------------------------------------------------------------------

def cmd_run(m: RunManifest) -> int:
    from .solver import solve

    doc = m.load()
    _need_config(m, doc)
    cfg = cfgmod.build_sim_config(doc)
    out = _prepare_out(m.out)
    traj = solve(cfg)
    snapshots.write(out / "snapshots.stpr", cfg.grid, traj.snapshots)
    d = traj.diagnostics
    with open(out / "diagnostics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "t", "dt", "mass", "min", "max", "max_pressure"])
        for i in range(len(d["t"])):
            w.writerow([i] + [repr(float(d[k][i])) for k in ("t", "dt", "mass", "min", "max", "max_pressure")])
    print(f"run: {len(traj.snapshots)} snapshots, {traj.steps} steps -> {out}")
    return EXIT_OK


def _echo(doc: dict, seed: int) -> dict:
    return {"config": doc, "seed": seed}


def cmd_sweep(m: RunManifest) -> int:
    doc = m.load()
    _need_config(m, doc)
    plan = cfgmod.build_sweep_plan(doc, workers=m.threads, seed=m.seed)
    out = _prepare_out(m.out)
    s = doc["sweep"]
    theorem3 = None
    if s.get("solver", "pde") == "synthetic":
        if plan.reference != "mesa":
            raise ConfigError("the synthetic solver needs the mesa reference")
        ref = harness.build_reference(plan)
        solver = harness.SyntheticSolver(ref.density_at(0.0), float(s.get("synthetic_rate", 0.5)),
                                         float(s.get("synthetic_constant", 1.0)), plan.axis)
        report = harness.run_sweep(plan, solver=solver, reference=ref)
    else:
        report = harness.run_sweep(plan, keep_trajectories=True)
        if not any(r.failure for r in report.records):
            theorem3 = harness.theorem3_sweep(plan, trajectories=report.trajectories)
    (out / "sweep.csv").write_text(harness.report_csv(report))
    (out / "sweep.json").write_text(harness.report_json(report, _echo(doc, m.seed), theorem3))
    for name, v in report.verdicts.items():
        print(f"{name}: {'PASS' if v.passed else 'FAIL'}{' (degenerate)' if v.degenerate else ''} {v.detail}")
    if theorem3 is not None:
        print(f"theorem3: {'PASS' if theorem3.passed else 'FAIL'}")
    failures = [r for r in report.records if r.failure]
    if failures and len(failures) == len(report.records):
        _tag_line("SOLVER_ERROR", "every run in the sweep failed: " + failures[0].failure)
        return EXIT_SOLVER
    if not report.passed or (theorem3 is not None and not theorem3.passed):
        _tag_line("VERDICT_FAILED", ", ".join(k for k, v in report.verdicts.items() if not v.passed) or "theorem3")
        return EXIT_VERDICT
    return EXIT_OK


def cmd_metrics(m: RunManifest) -> int:
    doc = m.load()
    mdoc = doc.get("metrics", {})
    path = m.input or (Path(mdoc["input"]) if "input" in mdoc else None)
    if path is None:
        raise ConfigError("metrics needs --input or metrics.input")
    try:
        grid, snaps = snapshots.read(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if not snaps:
        raise ConfigError("snapshot file is empty")
    variant = doc.get("law", {}).get("kind", "power")
    variant = "singular" if variant == "singular" else "power"
    ref_kind = mdoc.get("reference", "none")
    ref: Optional[Field] = None
    if ref_kind == "mesa":
        ref = limits.mesa_field(grid, float(mdoc.get("mass", 1.0)))
    elif ref_kind == "initial":
        ref = snaps[0].density
    out = _prepare_out(m.out)
    cols = ["t", "mass", "min", "max", "l1", "l43", "linf", "bv", "relation", "relation_abs", "complementarity"]
    if ref is not None:
        cols += ["err_hminus1", "err_l1", "err_l43"] + (["err_w2"] if grid.dim == 1 else [])
    rows = []
    for s in snaps:
        n, p = s.density, s.pressure
        row = [s.t, core.mass(n), float(np.min(n.values)), float(np.max(n.values)),
               metrics.lp_norm(n, 1), metrics.lp_norm(n, 4 / 3), metrics.lp_norm(n, float("inf")),
               metrics.bv_seminorm(n), metrics.relation_residual(n, p),
               metrics.relation_residual(n, p, absolute=True),
               metrics.complementarity_residual(n, p, variant=variant)]
        if ref is not None:
            diff = n - ref
            row += [metrics.hminus1_norm(diff), metrics.lp_norm(diff, 1), metrics.lp_norm(diff, 4 / 3)]
            if grid.dim == 1:
                row.append(metrics.w2_distance_1d(n, ref))
        rows.append(row)
    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
    print(f"metrics: {len(rows)} snapshots -> {out / 'metrics.csv'}")
    return EXIT_OK


def cmd_validate(m: RunManifest) -> int:
    m.load()  # overrides are still syntax-checked
    out = _prepare_out(m.out)
    results = validate.run_properties(m.seed)
    (out / "validate.json").write_text(validate.results_json(results, m.seed))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    bad = [r.name for r in results if not r.passed]
    if bad:
        _tag_line("PROPERTY_FAILED", ", ".join(bad))
        return EXIT_VERDICT
    return EXIT_OK


def cmd_appendix(m: RunManifest) -> int:
    doc = m.load()
    a = doc.get("appendix", {})
    out = _prepare_out(m.out)
    cfg2d = harness.appendix_b_config(int(a.get("n2d", 64)), float(a.get("T2d", 1.0)),
                                      float(a.get("gamma2d", 3.0)), float(a.get("drift2d", 0.2)))
    report = harness.appendix_suites(m.seed, int(a.get("pairs", 100)), int(a.get("n1d", 256)), cfg2d)
    (out / "appendix.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    sand = report["sandwich"]
    b = report["appendix_b"]
    print(f"sandwich: {sum(p['left_ok'] and p['right_ok'] for p in sand['pairs'])}/{len(sand['pairs'])} pairs pass")
    print(f"appendix B: moment_ok={b['moment_ok']} entropy_ok={b['entropy_ok']} log_hls_ok={b['log_hls_ok']}")
    if not report["passed"]:
        _tag_line("VERDICT_FAILED", "appendix suite")
        return EXIT_VERDICT
    return EXIT_OK


HANDLERS = {"run": cmd_run, "sweep": cmd_sweep, "metrics": cmd_metrics,
            "validate": cmd_validate, "appendix": cmd_appendix}


def _threads(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("STIFFPRESS_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"STIFFPRESS_THREADS must be an integer, got {env!r}") from None
    return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stiffpress", description="Stiff-pressure limit laboratory.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path)
        s.add_argument("--out", type=Path, default=Path("out"))
        s.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--threads", type=int)
        if name == "metrics":
            s.add_argument("--input", type=Path)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigError("--threads must be >= 1")
        manifest = RunManifest(args.command, args.config, args.out, args.overrides, args.seed, threads,
                               getattr(args, "input", None))
        return HANDLERS[args.command](manifest)
    except ConfigError as exc:
        _tag_line(exc.tag, exc)
        return EXIT_CONFIG
    except StiffPressError as exc:
        # bad grids or law parameters are configuration problems; the rest arise while computing
        code = EXIT_CONFIG if isinstance(exc, (InvalidGrid, DomainError)) else EXIT_SOLVER
        _tag_line(exc.tag, exc)
        return code


if __name__ == "__main__":
    sys.exit(main())

"""Parameter sweeps, rate fits and theorem verdicts.

A sweep runs one configuration template at several stiffness values, measures
the distance to a reference at every snapshot and fits log-log slopes of the
sup-over-time error against the stiffness (gamma, or 1/eps for the singular
law). Verdicts are computed by pure functions of the error records.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import core, limits, metrics
from .core import Field, Grid
from .errors import ConfigError, StiffPressError
from .initial import InitialDatum
from .limits import LimitReference
from .pressure import POWER, SINGULAR, PressureLaw
from .solver import DriftSpec, QuadraticPotential, SimConfig, Snapshot, Trajectory, solve

GAMMA = "gamma"
EPSILON = "epsilon"

BASE_NORMS = ("hminus1", "l1", "l43", "w2_1d")


def _norm_ok(name: str) -> bool:
    if name in BASE_NORMS:
        return True
    if name.startswith("lp:"):
        try:
            return float(name[3:]) >= 1.0
        except ValueError:
            return False
    return False


def corollary_exponent(p: float) -> float:
    """Rate exponent of the L^p corollary: (p-1)/p up to p = 4/3, then 1/(3p)."""
    if not p > 1.0:
        raise ValueError("the L^p corollary needs p > 1")
    return (p - 1.0) / p if p <= 4.0 / 3.0 else 1.0 / (3.0 * p)


@dataclass(frozen=True)
class SweepPlan:
    base: SimConfig
    params: tuple[float, ...]
    axis: str = GAMMA
    reference: str = "mesa"  # "mesa" or "surrogate"
    ref_param: Optional[float] = None
    norms: tuple[str, ...] = ("hminus1", "l43")
    lp: tuple[float, ...] = ()
    seed: int = 0
    slope_tol: float = 0.15
    r2_min: float = 0.95
    calibrate: int = 2
    residual_threshold: float = math.inf
    workers: int = 1

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if len(params) < 2:
            raise ConfigError("a sweep needs at least two parameter values")
        if self.axis == GAMMA:
            if any(b <= a for a, b in zip(params, params[1:])):
                raise ConfigError("gamma_list must be strictly increasing")
            if self.base.law.kind != POWER:
                raise ConfigError("gamma sweep needs a power law template")
        elif self.axis == EPSILON:
            if any(b >= a for a, b in zip(params, params[1:])):
                raise ConfigError("epsilon_list must be strictly decreasing")
            if self.base.law.kind != SINGULAR:
                raise ConfigError("epsilon sweep needs a singular law template")
        else:
            raise ConfigError(f"unknown sweep axis {self.axis!r}")
        norms = tuple(self.norms) + tuple(f"lp:{float(p):g}" for p in self.lp)
        object.__setattr__(self, "norms", tuple(dict.fromkeys(norms)))
        for n in self.norms:
            if not _norm_ok(n):
                raise ConfigError(f"unknown norm {n!r}")
            if n == "w2_1d" and self.base.grid.dim != 1:
                raise ConfigError("w2_1d needs a 1D grid")
        if self.reference not in ("mesa", "surrogate"):
            raise ConfigError(f"unknown reference {self.reference!r}")
        if self.reference == "mesa" and (self.base.drift is not None or self.base.reaction is not None):
            raise ConfigError("the mesa reference is only the limit without drift and reaction")
        if self.reference == "surrogate":
            ref = self.surrogate_param
            stiff = [self.stiffness(p) for p in params]
            if self.stiffness(ref) < 4.0 * max(stiff) * (1 - 1e-12):
                raise ConfigError("surrogate must be at least 4x stiffer than the sweep")
        if not 1 <= self.calibrate <= len(params):
            raise ConfigError("calibrate must be between 1 and the number of parameters")

    def stiffness(self, param: float) -> float:
        return param if self.axis == GAMMA else 1.0 / param

    @property
    def surrogate_param(self) -> float:
        if self.ref_param is not None:
            return float(self.ref_param)
        return 8.0 * max(self.params) if self.axis == GAMMA else min(self.params) / 8.0

    def config_for(self, param: float) -> SimConfig:
        return replace(self.base, law=replace(self.base.law, param=float(param)))


@dataclass
class SweepRecord:
    param: float
    times: list[float]
    errors: dict[str, list[float]]
    failure: Optional[str] = None

    def sup(self, norm: str) -> float:
        return max(self.errors[norm])

    def t_of_sup(self, norm: str) -> float:
        e = self.errors[norm]
        return self.times[int(np.argmax(e))]

    def e0(self, norm: str) -> float:
        return self.errors[norm][0]


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float


@dataclass
class NormFit:
    raw: Optional[RateFit]
    adjusted: Optional[RateFit]
    constant: float
    degenerate: bool


@dataclass
class Verdict:
    passed: bool
    margin: float
    detail: str
    degenerate: bool = False


@dataclass
class RateReport:
    axis: str
    records: list[SweepRecord]
    fits: dict[str, NormFit]
    verdicts: dict[str, Verdict]
    stiffness: list[float]
    trajectories: dict[float, Trajectory] = field(default_factory=dict, repr=False)

    def initial_error(self, norm: str) -> list[float]:
        return [r.e0(norm) for r in self.records if r.failure is None]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts.values())


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least squares of ln y on ln x."""
    pts = list(points)
    if len(pts) < 2:
        raise ValueError("fit_rate needs at least two points")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("fit_rate needs positive x and y; excise exact zeros first")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0:
        raise ValueError("fit_rate needs at least two distinct x values")
    # centred normal equations: exact on two points and on exact power laws
    dx, dy = lx - lx.mean(), ly - ly.mean()
    slope = float(dx @ dy) / float(dx @ dx)
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), r2)


# --- error evaluation --------------------------------------------------------------------------

def norm_distance(norm: str, a: Field, b: Field) -> float:
    if norm == "hminus1":
        return metrics.hminus1_norm(a - b)
    if norm == "l1":
        return metrics.lp_norm(a - b, 1.0)
    if norm == "l43":
        return metrics.lp_norm(a - b, 4.0 / 3.0)
    if norm == "w2_1d":
        return metrics.w2_distance_1d(a, b)
    if norm.startswith("lp:"):
        return metrics.lp_norm(a - b, float(norm[3:]))
    raise ConfigError(f"unknown norm {norm!r}")


def _errors(traj: Trajectory, ref: LimitReference, norms: Sequence[str]) -> dict[str, list[float]]:
    out = {n: [] for n in norms}
    for snap in traj.snapshots:
        r = ref.density_at(snap.t)
        for n in norms:
            out[n].append(norm_distance(n, snap.density, r))
    return out


def build_reference(plan: SweepPlan, solver: Callable[[SimConfig], Trajectory] = solve) -> LimitReference:
    grid = plan.base.grid
    if plan.reference == "mesa":
        mass = float(plan.base.init.params.get("mass", 1.0))
        return limits.mesa_indicator(grid, mass, plan.base.init.params.get("center"))
    return limits.surrogate_limit(plan.base, plan.surrogate_param, solve=solver)


def _run_one(args) -> tuple[float, Optional[Trajectory], Optional[str]]:
    config, solver = args
    try:
        return config.law.param, solver(config), None
    except StiffPressError as exc:
        return config.law.param, None, f"{exc.tag}: {exc}"


def _attributed(sup: float, e0: float) -> float:
    return max(sup - e0, 0.0)


def _fit_norm(stiff, sups, e0s, data_term, exponent, calibrate) -> NormFit:
    adj = [_attributed(s, e) for s, e in zip(sups, e0s)]
    raw_pts = [(k, s) for k, s in zip(stiff, sups) if s > 0]
    adj_pts = [(k, a) for k, a in zip(stiff, adj) if a > 0]
    raw = fit_rate(raw_pts) if len(raw_pts) >= 2 else None
    adjusted = fit_rate(adj_pts) if len(adj_pts) >= 2 else None
    excess = [max(s - d, 0.0) for s, d in zip(sups, data_term)]
    C = max(x * k ** exponent for x, k in zip(excess[:calibrate], stiff[:calibrate]))
    return NormFit(raw, adjusted, float(C), degenerate=all(s == 0.0 for s in sups))


def _bound_holds(stiff, sups, data_term, C, exponent) -> tuple[bool, float]:
    slack = [C * k ** (-exponent) + d - s for k, s, d in zip(stiff, sups, data_term)]
    return all(x >= -1e-15 for x in slack), float(min(slack))


def evaluate_verdicts(records: Sequence[SweepRecord], stiffness: Sequence[float], norms: Sequence[str],
                      slope_tol: float = 0.15, r2_min: float = 0.95, calibrate: int = 2,
                      ) -> tuple[dict[str, NormFit], dict[str, Verdict]]:
    """Fits and verdicts from error records; a pure function of its arguments.

    theorem1: H^-1 error <= C k^-1/2 + e0 with C from the first ``calibrate``
      points, adjusted slope <= -1/2 + slope_tol and R^2 >= r2_min.
    theorem2: L^4/3 adjusted slope <= -1/4 + slope_tol, or the bound
      error <= C k^-1/4 + e0^1/2 with one C.
    corollary: every lp:p norm has adjusted slope <= -alpha(p) + slope_tol.
    An adjusted error of zero everywhere means the data term dominates; that
    passes and is flagged degenerate.
    """
    ok = [(r, k) for r, k in zip(records, stiffness) if r.failure is None]
    failures = [f"{r.param:g}: {r.failure}" for r in records if r.failure is not None]
    fits: dict[str, NormFit] = {}
    verdicts: dict[str, Verdict] = {}
    if len(ok) < 2:
        for name in ("theorem1", "theorem2", "corollary"):
            verdicts[name] = Verdict(False, -math.inf, "fewer than two successful runs; " + "; ".join(failures))
        return fits, verdicts
    stiff = [k for _, k in ok]
    calibrate = min(calibrate, len(ok))

    def fail_note():
        return "" if not failures else " failed runs: " + "; ".join(failures)

    for norm in norms:
        sups = [r.sup(norm) for r, _ in ok]
        e0s = [r.e0(norm) for r, _ in ok]
        expo = {"hminus1": 0.5, "l43": 0.25}.get(norm)
        if expo is None and norm.startswith("lp:"):
            p = float(norm[3:])
            expo = corollary_exponent(p) if p > 1 else 0.0
        data = [math.sqrt(e) for e in e0s] if norm == "l43" else e0s
        fits[norm] = _fit_norm(stiff, sups, e0s, data, expo or 0.0, calibrate)

    def slope_verdict(norm, expo, want_r2):
        f = fits[norm]
        if f.degenerate or f.adjusted is None:
            return None
        target = -expo + slope_tol
        margin = target - f.adjusted.slope
        good = margin >= 0 and (not want_r2 or f.adjusted.r2 >= r2_min)
        return good, margin, f"adjusted slope {f.adjusted.slope:.4f} (target <= {target:.4f}), R2 {f.adjusted.r2:.4f}"

    if "hminus1" in fits:
        f = fits["hminus1"]
        sups = [r.sup("hminus1") for r, _ in ok]
        e0s = [r.e0("hminus1") for r, _ in ok]
        bound_ok, slack = _bound_holds(stiff, sups, e0s, f.constant, 0.5)
        sv = slope_verdict("hminus1", 0.5, True)
        if sv is None:
            verdicts["theorem1"] = Verdict(bound_ok and not failures, slack,
                                           "bound dominated by data term" + fail_note(), degenerate=True)
        else:
            good, margin, text = sv
            verdicts["theorem1"] = Verdict(good and bound_ok and not failures, min(margin, slack),
                                           f"{text}; C={f.constant:.4g}, bound slack {slack:.3g}" + fail_note())
    if "l43" in fits:
        f = fits["l43"]
        sups = [r.sup("l43") for r, _ in ok]
        data = [math.sqrt(r.e0("l43")) for r, _ in ok]
        bound_ok, slack = _bound_holds(stiff, sups, data, f.constant, 0.25)
        sv = slope_verdict("l43", 0.25, False)
        if sv is None:
            verdicts["theorem2"] = Verdict(bound_ok and not failures, slack,
                                           "bound dominated by data term" + fail_note(), degenerate=True)
        else:
            good, margin, text = sv
            verdicts["theorem2"] = Verdict((good or bound_ok) and not failures, max(margin, slack),
                                           f"{text}; C={f.constant:.4g}, bound slack {slack:.3g}" + fail_note())
    lp_norms = [n for n in norms if n.startswith("lp:") and float(n[3:]) > 1.0]
    if lp_norms:
        parts, good_all, margins, degen = [], True, [], True
        for n in lp_norms:
            sv = slope_verdict(n, corollary_exponent(float(n[3:])), False)
            if sv is None:
                parts.append(f"{n}: degenerate")
                continue
            degen = False
            good_all &= sv[0]
            margins.append(sv[1])
            parts.append(f"{n}: {sv[2]}")
        verdicts["corollary"] = Verdict(good_all and not failures, min(margins) if margins else 0.0,
                                        "; ".join(parts) + fail_note(), degenerate=degen)
    return fits, verdicts


def run_sweep(plan: SweepPlan, solver: Callable[[SimConfig], Trajectory] = solve,
              reference: Optional[LimitReference] = None, keep_trajectories: bool = False) -> RateReport:
    """Solve at every parameter, measure errors against the reference, fit and judge.

    A failing run is annotated and the sweep continues; a failing reference
    aborts. Results are merged in parameter order whatever the worker count.
    """
    ref = reference if reference is not None else build_reference(plan, solver)
    jobs = [(plan.config_for(p), solver) for p in plan.params]
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    by_param = {param: (traj, err) for param, traj, err in results}
    records, trajs = [], {}
    for p in plan.params:
        traj, err = by_param[p]
        if err is not None:
            records.append(SweepRecord(p, [], {n: [] for n in plan.norms}, err))
            continue
        records.append(SweepRecord(p, traj.times, _errors(traj, ref, plan.norms)))
        if keep_trajectories:
            trajs[p] = traj
    stiff = [plan.stiffness(p) for p in plan.params]
    ok_stiff = [k for r, k in zip(records, stiff) if r.failure is None]
    fits, verdicts = evaluate_verdicts(records, stiff, plan.norms, plan.slope_tol, plan.r2_min, plan.calibrate)
    return RateReport(plan.axis, records, fits, verdicts, ok_stiff, trajs)


# --- limit relation ----------------------------------------------------------------------------

@dataclass
class Theorem3Row:
    param: float
    relation: float
    relation_abs: float
    complementarity: float
    max_density: float
    mass: float


@dataclass
class Theorem3Report:
    rows: list[Theorem3Row]
    threshold: float

    def trend_ok(self, key: str) -> bool:
        vals = [getattr(r, key) for r in self.rows]
        return len(vals) >= 2 and vals[-1] < vals[0] and vals[-1] < self.threshold

    @property
    def passed(self) -> bool:
        return all(self.trend_ok(k) or self._all_zero(k) for k in ("relation", "complementarity"))

    def _all_zero(self, key: str) -> bool:
        return all(getattr(r, key) == 0.0 for r in self.rows)


def final_residuals(config: SimConfig, snap: Snapshot) -> tuple[float, float, float]:
    V = config.drift.potential if config.drift is not None else None
    g = config.reaction.rate if config.reaction is not None else None
    variant = "singular" if config.law.kind == SINGULAR else "power"
    return (metrics.relation_residual(snap.density, snap.pressure),
            metrics.relation_residual(snap.density, snap.pressure, absolute=True),
            metrics.complementarity_residual(snap.density, snap.pressure, V, g, variant, snap.t))


def theorem3_sweep(plan: SweepPlan, solver: Callable[[SimConfig], Trajectory] = solve,
                   trajectories: Optional[dict[float, Trajectory]] = None) -> Theorem3Report:
    """Relation and complementarity residuals of the final snapshots across the sweep."""
    rows = []
    for p in plan.params:
        cfg = plan.config_for(p)
        traj = (trajectories or {}).get(p) or solver(cfg)
        snap = traj.final
        rel, rel_abs, comp = final_residuals(cfg, snap)
        rows.append(Theorem3Row(p, rel, rel_abs, comp, float(np.max(snap.density.values)),
                                core.mass(snap.density)))
    return Theorem3Report(rows, plan.residual_threshold)


# --- synthetic solver ----------------------------------------------------------------------------

class SyntheticSolver:
    """Stand-in for :func:`solve` with prescribed errors against a reference.

    At t = 0 the density equals the reference; later snapshots add
    ``constant * k^-rate`` times a fixed mass-neutral shape whose H^-1 norm
    is 1, so the H^-1 error is exactly the prescribed power law.
    """

    def __init__(self, reference: Field, rate: float = 0.5, constant: float = 1.0, axis: str = GAMMA):
        self.reference = reference
        self.rate = rate
        self.constant = constant
        self.axis = axis
        grid = reference.grid
        xs = grid.mesh()
        width = [hi - lo for lo, hi in zip(grid.lo, grid.hi)]
        shape = np.ones(grid.shape)
        for x, lo, w in zip(xs, grid.lo, width):
            s = (x - lo) / w
            shape = shape * np.sin(2 * np.pi * s)
        shape = shape - shape.mean()
        self.shape = shape / metrics.hminus1_norm(Field(grid, shape))

    def __call__(self, config: SimConfig) -> Trajectory:
        k = config.law.param if self.axis == GAMMA else 1.0 / config.law.param
        amp = self.constant * k ** (-self.rate)
        snaps = []
        for t in config.snapshot_times:
            vals = self.reference.values + (amp * self.shape if t > 0 else 0.0)
            d = Field(config.grid, vals)
            snaps.append(Snapshot(t, d, Field(config.grid, 0.0)))
        return Trajectory(snaps, {"t": np.asarray(config.snapshot_times)}, 0, 0.0)


# --- appendix suites ---------------------------------------------------------------------------

def random_sandwich_pair(rng: np.random.Generator, grid: Grid, n_lower: float = 0.5) -> tuple[Field, Field]:
    """Two equal-mass cell-averaged densities with values in [n_lower, 1]."""
    mid = 0.5 * (1.0 + n_lower)
    amp = 0.5 * (1.0 - n_lower) * 0.98
    x = grid.centers()
    L = grid.hi[0] - grid.lo[0]
    s = (x - grid.lo[0]) / L

    def perturbation():
        while True:
            v = draw()
            peak = np.max(np.abs(v))
            if peak > 1e-8:  # a step pattern can miss every cell; redraw rather than amplify roundoff
                return v * (amp * rng.uniform(0.1, 1.0) / peak)

    def draw():
        kind = rng.integers(3)
        if kind == 0:  # few smooth modes
            v = sum(rng.normal() * np.cos(2 * np.pi * k * s + rng.uniform(0, 2 * np.pi)) / k
                    for k in range(1, int(rng.integers(2, 8))))
        elif kind == 1:  # random steps
            cuts = np.sort(rng.uniform(0, 1, int(rng.integers(1, 6))))
            levels = rng.uniform(-1, 1, cuts.size + 1)
            v = levels[np.searchsorted(cuts, s)]
        else:  # localized bump
            c, w = rng.uniform(0.2, 0.8), rng.uniform(0.03, 0.2)
            v = np.exp(-((s - c) / w) ** 2) * rng.choice([-1.0, 1.0])
        return np.asarray(v, dtype=float) - np.mean(v)

    return Field(grid, mid + perturbation()), Field(grid, mid + perturbation())


def sandwich_suite(seed: int = 0, pairs: int = 100, n: int = 256, n_lower: float = 0.5) -> list[dict]:
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(1, 0.0, 1.0, n, "dirichlet_zero")
    out = []
    for i in range(pairs):
        f, g = random_sandwich_pair(rng, grid, n_lower)
        res = metrics.sandwich_check(f, g, n_lower)
        out.append({"pair": i, "w2": res.w2, "hm1": res.hm1, "tol": res.tol,
                    "left_ok": res.left_ok, "right_ok": res.right_ok})
    return out


def appendix_b_config(n: int = 64, T: float = 1.0, gamma: float = 3.0, drift: float = 0.2) -> SimConfig:
    """Smooth bump in a 2D box with a weak confining drift V = drift |x|^2 / 2.

    For this V the drift condition D2V >= (lam + tr D2V / 2) I holds with lam = -drift.
    """
    grid = Grid.uniform(2, -2.0, 2.0, n, "dirichlet_zero")
    return SimConfig(grid, PressureLaw.power(gamma), T,
                     InitialDatum("bump", {"height": 0.9, "radius": 0.8}),
                     drift=DriftSpec(QuadraticPotential(drift, (0.0, 0.0)), lam=-drift))


def appendix_b_suite(config: Optional[SimConfig] = None, solver=solve) -> dict:
    """Second moment, entropy and log-HLS along a 2D run.

    Recorded bounds for V = a|x|^2/2 and g = 0, with p0 the initial max pressure:
      moment(t)  <= moment(0) + 2 d M (gamma-1)/gamma p0 t
      entropy(t) <= entropy(0) + d a M t
    """
    cfg = config or appendix_b_config()
    if cfg.grid.dim != 2:
        raise ConfigError("appendix B suite needs a 2D grid")
    traj = solver(cfg)
    a = cfg.drift.potential.strength if cfg.drift is not None else 0.0
    d = cfg.grid.dim
    rows = [metrics.diagnostics_2d(s.density) for s in traj.snapshots]
    M = rows[0].mass
    gamma = cfg.law.param if cfg.law.kind == POWER else 2.0
    p0 = traj.initial_max_pressure
    m_const = rows[0].second_moment + 2 * d * M * (gamma - 1) / gamma * p0 * cfg.T
    s_const = rows[0].entropy + d * a * M * cfg.T
    snaps = []
    for s, r in zip(traj.snapshots, rows):
        snaps.append({"t": s.t, "mass": r.mass, "second_moment": r.second_moment, "entropy": r.entropy,
                      "log_hls_lhs": r.log_hls_lhs, "log_hls_bound": r.log_hls_bound,
                      "log_hls_ok": r.log_hls_ok})
    return {
        "snapshots": snaps,
        "moment_bound": m_const,
        "entropy_bound": s_const,
        "moment_ok": all(r.second_moment <= m_const for r in rows),
        "entropy_ok": all(r.entropy <= s_const for r in rows),
        "log_hls_ok": all(r.log_hls_ok for r in rows),
    }


def appendix_suites(seed: int = 0, pairs: int = 100, n1d: int = 256, config_2d: Optional[SimConfig] = None) -> dict:
    sand = sandwich_suite(seed, pairs, n1d)
    b = appendix_b_suite(config_2d)
    report = {
        "seed": seed,
        "sandwich": {"pairs": sand, "all_ok": all(p["left_ok"] and p["right_ok"] for p in sand)},
        "appendix_b": b,
    }
    report["passed"] = report["sandwich"]["all_ok"] and b["moment_ok"] and b["entropy_ok"] and b["log_hls_ok"]
    return report


# --- output ------------------------------------------------------------------------------------

def content_hash(echo: dict) -> str:
    """Git blob hash of the canonical JSON encoding of ``echo``."""
    body = json.dumps(echo, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


def report_csv(report: RateReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parameter", "norm", "sup_error", "e0", "t_of_sup"])
    for r in report.records:
        for norm in r.errors:
            if r.failure is not None:
                w.writerow([repr(r.param), norm, "nan", "nan", "nan"])
            else:
                w.writerow([repr(r.param), norm, repr(r.sup(norm)), repr(r.e0(norm)), repr(r.t_of_sup(norm))])
    return buf.getvalue()


def _fit_dict(f: Optional[RateFit]):
    return None if f is None else asdict(f)


def report_json(report: RateReport, echo: Optional[dict] = None,
                theorem3: Optional[Theorem3Report] = None) -> str:
    out = {
        "axis": report.axis,
        "records": [{"parameter": r.param, "failure": r.failure, "times": r.times, "errors": r.errors}
                    for r in report.records],
        "fits": {n: {"raw": _fit_dict(f.raw), "adjusted": _fit_dict(f.adjusted),
                     "constant": f.constant, "degenerate": f.degenerate} for n, f in report.fits.items()},
        "verdicts": {k: asdict(v) for k, v in report.verdicts.items()},
        "passed": report.passed,
    }
    if theorem3 is not None:
        out["theorem3"] = {"rows": [asdict(r) for r in theorem3.rows],
                           "relation_trend_ok": theorem3.trend_ok("relation"),
                           "complementarity_trend_ok": theorem3.trend_ok("complementarity"),
                           "passed": theorem3.passed}
    if echo is not None:
        out["config"] = echo
        out["config_hash"] = content_hash(echo)
    return json.dumps(out, indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    raise TypeError(f"not serialisable: {type(obj)}")

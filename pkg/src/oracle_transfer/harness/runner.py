"""Experiment execution: wrapped and baseline runs, sweeps, bound audits."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..algorithms import (ELLIPSOID, LATTICE_ENUMERATOR, NESTEROV_AGD,
                          PROJECTED_SUBGRADIENT, agd_error_bound,
                          ellipsoid_error_bound, make_algorithm,
                          subgradient_error_bound)
from ..core import as_vector, check_convex_extensibility
from ..errors import (AlgorithmQueryOutOfBall, BadGrid, BudgetExceeded,
                      SchemaError)
from ..oracles import (FEASIBLE, ApproxFirstOrderOracle,
                       ApproxSeparationOracle)
from ..trace import RunSummary, RunTrace, TraceRow, write_trace_csv
from ..transfer_lipschitz import LipschitzTransferState, run_wrapped
from ..transfer_separation import (ExchangeResult, SeparationTransferState,
                                   run_wrapped_constrained)
from ..transfer_smooth import SmoothTransferState, run_wrapped_smooth
from .config import ExperimentConfig


@dataclass
class RunArtifacts:
    """Internal objects of one execution, for verification and audits."""

    config: ExperimentConfig
    objective: object
    constraint: object | None
    f_oracle: ApproxFirstOrderOracle
    sep_oracle: ApproxSeparationOracle | None
    f_state: LipschitzTransferState | None
    smooth_state: SmoothTransferState | None
    sep_state: SeparationTransferState | None
    opt_value: float | None


class RawFirstOrderExchange:
    """Baseline channel: forwards raw oracle responses with no repair."""

    def __init__(self, oracle: ApproxFirstOrderOracle, T: int,
                 opt_value: float | None = None):
        self._oracle = oracle
        self.dim = oracle.dim
        self.R = oracle.R
        self.T = int(T)
        self.M = oracle.objective.M
        self.alpha = oracle.objective.alpha
        self.rho = None
        self.exchanges = 0
        self.rows: list[TraceRow] = []
        self._opt_value = opt_value
        self._best_exact = np.inf

    def first_order(self, x):
        if self.exchanges >= self.T:
            raise BudgetExceeded(f"exchange budget T = {self.T} exhausted")
        q = as_vector(x, self.dim)
        if np.linalg.norm(q) > self.R * (1.0 + 1e-9) + 1e-12:
            raise AlgorithmQueryOutOfBall("query outside B(R)")
        t = self.exchanges + 1
        f_tilde, g_tilde = self._oracle.query(q, t)
        f_exact = self._oracle.objective.value(q)
        self._best_exact = min(self._best_exact, f_exact)
        gap = None if self._opt_value is None else self._best_exact - self._opt_value
        self.rows.append(TraceRow(
            t=t, x=q.copy(), f_tilde=float(f_tilde), g_tilde=np.array(g_tilde),
            f_hat=float(f_tilde), g_hat=np.array(g_tilde), shift=0.0,
            f_exact=f_exact, best_gap=gap))
        self.exchanges = t
        return f_tilde, g_tilde


class RawConstrainedExchange:
    """Baseline constrained channel: raw first-order and separation responses."""

    def __init__(self, f_oracle: ApproxFirstOrderOracle,
                 sep_oracle: ApproxSeparationOracle, T: int,
                 opt_value: float | None = None):
        self._f_oracle = f_oracle
        self._sep_oracle = sep_oracle
        self.dim = f_oracle.dim
        self.R = sep_oracle.R
        self.T = int(T)
        self.M = f_oracle.objective.M
        self.alpha = f_oracle.objective.alpha
        self.rho = sep_oracle.rho
        self.exchanges = 0
        self.rows: list[TraceRow] = []
        self._opt_value = opt_value
        self._best_exact = np.inf

    def query(self, x) -> ExchangeResult:
        if self.exchanges >= self.T:
            raise BudgetExceeded(f"exchange budget T = {self.T} exhausted")
        q = as_vector(x, self.dim)
        if np.linalg.norm(q) > self.R * (1.0 + 1e-9) + 1e-12:
            raise AlgorithmQueryOutOfBall("query outside B(R)")
        t = self.exchanges + 1
        f_tilde, g_tilde = self._f_oracle.query(q, t)
        flag, normal = self._sep_oracle.query(q, t)
        f_exact = self._f_oracle.objective.value(q)
        if self._sep_oracle.constraint.contains(q):
            self._best_exact = min(self._best_exact, f_exact)
        gap = None
        if self._opt_value is not None and np.isfinite(self._best_exact):
            gap = self._best_exact - self._opt_value
        self.rows.append(TraceRow(
            t=t, x=q.copy(), f_tilde=float(f_tilde), g_tilde=np.array(g_tilde),
            f_hat=float(f_tilde), g_hat=np.array(g_tilde), shift=0.0,
            flag_raw=flag, flag_repaired=flag,
            sep_g_tilde=None if normal is None else np.array(normal),
            sep_g_hat=None if normal is None else np.array(normal),
            f_exact=f_exact, best_gap=gap))
        self.exchanges = t
        return ExchangeResult(f_tilde, g_tilde, flag, normal)


def execute(cfg: ExperimentConfig) -> tuple[RunTrace, RunArtifacts]:
    """Run the configured experiment; returns the trace and internal objects."""
    objective = cfg.build_objective()
    noise = cfg.build_noise()
    f_oracle = ApproxFirstOrderOracle(objective, noise)
    algorithm = make_algorithm(cfg.build_algorithm_config())

    constraint = None
    sep_oracle = None
    f_state = None
    smooth_state = None
    sep_state = None

    constrained_run = cfg.transfer == "constrained" or (
        cfg.transfer == "none" and cfg.constraint is not None)
    if constrained_run:
        constraint = cfg.build_constraint()
        sep_oracle = ApproxSeparationOracle(constraint, cfg.build_sep_noise())
        opt_value = cfg.constrained_opt_value
    else:
        opt_value = objective.opt_value

    if cfg.transfer == "lipschitz":
        f_state = LipschitzTransferState(cfg.dim, objective.M, cfg.R, noise.eta)
        x_bar, trace = run_wrapped(algorithm, f_oracle, cfg.T,
                                   opt_value=opt_value, state=f_state)
    elif cfg.transfer == "smooth":
        smooth_state = SmoothTransferState(cfg.dim, objective.M, cfg.R, noise.eta,
                                           objective.alpha, cfg.T, cfg.build_estimator())
        x_bar, trace = run_wrapped_smooth(algorithm, f_oracle, cfg.T,
                                          opt_value=opt_value, state=smooth_state)
    elif cfg.transfer == "constrained":
        f_state = LipschitzTransferState(cfg.dim, objective.M, cfg.R, noise.eta)
        sep_state = SeparationTransferState(cfg.dim, cfg.R, sep_oracle.eta_c,
                                            constraint.rho)
        x_bar, trace = run_wrapped_constrained(
            algorithm, f_oracle, sep_oracle, cfg.T, ground_set=cfg.ground_set,
            opt_value=opt_value, f_state=f_state, sep_state=sep_state)
    else:  # none: the naive baseline
        if constrained_run:
            channel = RawConstrainedExchange(f_oracle, sep_oracle, cfg.T, opt_value)
        else:
            channel = RawFirstOrderExchange(f_oracle, cfg.T, opt_value)
        x_bar = as_vector(algorithm.run(channel), cfg.dim)
        trace = RunTrace(rows=channel.rows, final_point=x_bar)

    artifacts = RunArtifacts(cfg, objective, constraint, f_oracle, sep_oracle,
                             f_state, smooth_state, sep_state, opt_value)
    return trace, artifacts


def theorem_bound(cfg: ExperimentConfig, artifacts: RunArtifacts,
                  trace: RunTrace) -> float | None:
    """Applicable transfer guarantee for the configured run, if any."""
    eta = float(cfg.noise.get("eta", 0.0))
    R = cfg.R
    T = cfg.T
    kind = cfg.algorithm["kind"]
    obj = artifacts.objective
    M_prime = obj.M + eta / (2.0 * R)
    if cfg.transfer == "lipschitz" and kind == PROJECTED_SUBGRADIENT:
        return subgradient_error_bound(T, M_prime, R) + 4.0 * eta * T
    if cfg.transfer == "smooth" and kind == NESTEROV_AGD:
        alpha_prime = artifacts.smooth_state.alpha_certificate
        return agd_error_bound(T, alpha_prime, R) + 5.0 * eta * (T + 2)
    if cfg.transfer == "constrained" and kind == ELLIPSOID:
        eta_c = artifacts.sep_oracle.eta_c
        rho = artifacts.constraint.rho
        err = ellipsoid_error_bound(T, M_prime, R, rho - eta_c, cfg.dim)
        return err + 4.0 * eta * T + 2.0 * eta_c * obj.M * R / rho
    if cfg.transfer == "constrained" and kind == LATTICE_ENUMERATOR:
        # the enumerator is exact over the lattice given exact responses
        return 4.0 * eta * T
    return None


def max_mc_stderr(trace: RunTrace) -> float:
    vals = [row.mc_stderr for row in trace.rows if row.mc_stderr is not None]
    return max(vals) if vals else 0.0


def _extensibility(rows: list[TraceRow], raw: bool) -> bool | None:
    pairs = []
    for row in rows:
        f = row.f_tilde if raw else row.f_hat
        g = row.g_tilde if raw else row.g_hat
        if f is None or g is None:
            return None
        pairs.append((row.x, f, g))
    if not pairs:
        return None
    return check_convex_extensibility(pairs, tol=1e-9).extensible


def run_experiment(cfg: ExperimentConfig, out_dir=None, write: bool = True) -> RunTrace:
    """Execute, audit, and (optionally) persist one experiment."""
    start = time.perf_counter()
    trace, artifacts = execute(cfg)
    wall = time.perf_counter() - start

    x_bar = trace.final_point
    final_gap = None
    final_feasible = None
    if artifacts.opt_value is not None:
        final_gap = artifacts.objective.value(x_bar) - artifacts.opt_value
    if artifacts.constraint is not None:
        final_feasible = artifacts.constraint.contains(x_bar, tol=1e-9)

    bound = theorem_bound(cfg, artifacts, trace)
    bound_ok = None
    if bound is not None and final_gap is not None:
        # 10% multiplicative slack plus three estimator standard errors
        bound_ok = final_gap <= bound * 1.1 + 3.0 * max_mc_stderr(trace) + 1e-12

    raw_ext = _extensibility(trace.rows, raw=True)
    repaired_ext = None if cfg.transfer == "smooth" else _extensibility(trace.rows, raw=False)

    trace.summary = RunSummary(
        transfer=cfg.transfer, algorithm=cfg.algorithm["kind"],
        final_point=np.asarray(x_bar), final_gap=final_gap,
        final_feasible=final_feasible, bound=bound, bound_ok=bound_ok,
        raw_extensible=raw_ext, repaired_extensible=repaired_ext,
        wall_time=wall, config_hash=cfg.config_hash(), n_rows=len(trace.rows))

    if write:
        out = Path(out_dir) if out_dir else Path.cwd()
        out.mkdir(parents=True, exist_ok=True)
        write_trace_csv(trace, out / f"{cfg.name}.csv", cfg.config_hash())
        summary_payload = {"config": cfg.to_dict(), "summary": trace.summary.to_dict()}
        import json
        with open(out / f"{cfg.name}.summary.json", "w") as fh:
            json.dump(summary_payload, fh, indent=2, sort_keys=True)
    return trace


SWEEP_COLUMNS = ["transfer", "axis", "value", "final_gap", "bound", "bound_ok"]


def _recipe_eta(M: float, R: float, T: int) -> float:
    eps = M * R / math.sqrt(T)
    return eps ** 3 / (M * M * R * R)


def sweep(cfg: ExperimentConfig, axis: str, values: list,
          recipe: bool = False, include_baseline: bool = False) -> list[dict]:
    """One run per grid value of ``axis`` (eta or T); returns audit rows.

    With ``recipe`` set, a T sweep also couples the oracle accuracy to the
    accuracy-tradeoff schedule eta = eps^3/(M R)^2 at eps = M R / sqrt(T).
    """
    if axis not in ("eta", "T"):
        raise BadGrid(f"unknown sweep axis {axis!r}")
    if not values:
        raise BadGrid("sweep grid is empty")
    objective = cfg.build_objective()
    rows = []
    for value in values:
        if axis == "eta":
            noise = dict(cfg.noise)
            noise["eta"] = float(value)
            point = cfg.replace(noise=noise, name=f"{cfg.name}-eta-{value}")
        else:
            T = int(value)
            updates = {"T": T, "name": f"{cfg.name}-T-{value}"}
            if recipe:
                noise = dict(cfg.noise)
                noise["eta"] = _recipe_eta(objective.M, cfg.R, T)
                updates["noise"] = noise
            point = cfg.replace(**updates)
        variants = [point]
        if include_baseline and point.transfer != "none":
            variants.append(point.replace(transfer="none", name=point.name + "-baseline"))
        for variant in variants:
            trace = run_experiment(variant, write=False)
            s = trace.summary
            rows.append({"transfer": variant.transfer, "axis": axis,
                         "value": float(value), "final_gap": s.final_gap,
                         "bound": s.bound, "bound_ok": s.bound_ok})
    return rows


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            rec = dict(row)
            for key in ("final_gap", "bound"):
                rec[key] = "" if rec.get(key) is None else repr(float(rec[key]))
            rec["bound_ok"] = "" if rec.get("bound_ok") is None else str(rec["bound_ok"])
            writer.writerow(rec)


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_COLUMNS:
            raise SchemaError(f"{path}: expected columns {SWEEP_COLUMNS}")
        rows = []
        for rec in reader:
            rows.append({
                "transfer": rec["transfer"], "axis": rec["axis"],
                "value": float(rec["value"]),
                "final_gap": float(rec["final_gap"]) if rec["final_gap"] else None,
                "bound": float(rec["bound"]) if rec["bound"] else None,
                "bound_ok": rec["bound_ok"] == "True" if rec["bound_ok"] else None,
            })
    if not rows:
        raise SchemaError(f"{path}: sweep file has no rows")
    return rows

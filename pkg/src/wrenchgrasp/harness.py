"""Experiment harness: method comparisons, surveys, and failure statistics.

Every trial draws one shared candidate set, lets each method pick from it,
and rolls the picks through the simulator, so within-trial differences are
attributable to selection alone. Records serialize to a schema-stable CSV.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .cost import CostBreakdown, CostWeights, analytic_cost
from .dynsim import rollout
from .errors import InvalidInputError, NoCandidateError
from .grasp import candidate_set_hash, geometry_score, select_grasp
from .scenario import Scenario
from .surrogate import MlpModel, featurize, forward

METHODS = ("analytic", "surrogate", "geometry")

RECORD_COLUMNS = (
    "scenario", "method", "trial", "seed", "grasp_index", "candidate_hash",
    "tau_max_nm", "s_max_m", "alpha_max_rad", "failed",
    "c_tau_nm", "c_slip_n", "c_align_rad", "total_cost", "lever_m", "status",
)


@dataclass(frozen=True)
class TrialRecord:
    """One (scenario, method, trial) outcome row."""

    scenario: str
    method: str
    trial: int
    seed: int
    grasp_index: int
    candidate_hash: str
    tau_max: float
    s_max: float
    alpha_max: float
    failed: bool
    c_tau: float
    c_slip: float
    c_align: float
    total: float
    lever: float
    status: str = "ok"

    def row(self):
        return [self.scenario, self.method, str(self.trial), str(self.seed),
                str(self.grasp_index), self.candidate_hash,
                repr(self.tau_max), repr(self.s_max), repr(self.alpha_max),
                str(self.failed), repr(self.c_tau), repr(self.c_slip),
                repr(self.c_align), repr(self.total), repr(self.lever),
                self.status]


def write_records_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# schema_version=1\n")
        w = csv.writer(fh)
        w.writerow(RECORD_COLUMNS)
        for r in records:
            w.writerow(r.row())


def read_records_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, rows = rows[0], rows[1:]
    if tuple(header) != RECORD_COLUMNS:
        raise InvalidInputError(f"unexpected record columns: {header}")
    out = []
    for r in rows:
        out.append(TrialRecord(
            scenario=r[0], method=r[1], trial=int(r[2]), seed=int(r[3]),
            grasp_index=int(r[4]), candidate_hash=r[5], tau_max=float(r[6]),
            s_max=float(r[7]), alpha_max=float(r[8]), failed=r[9] == "True",
            c_tau=float(r[10]), c_slip=float(r[11]), c_align=float(r[12]),
            total=float(r[13]), lever=float(r[14]), status=r[15]))
    return out


def trial_seed(scn: Scenario, trial: int) -> int:
    if trial < len(scn.seeds):
        return int(scn.seeds[trial])
    root = np.random.SeedSequence(entropy=int(scn.seeds[0]), spawn_key=(trial,))
    return int(root.generate_state(1)[0])


def _select(method: str, candidates, scorer_ctx, model):
    """Pick a candidate per the method; returns (index, analytic breakdown)."""
    scn, cloud, traj, targets = scorer_ctx
    if method == "analytic":
        breakdowns = [analytic_cost(g, traj, scn.omega, scn.body, scn.weights,
                                    targets=targets, impulse_dt=scn.impulse_dt)
                      for g in candidates]
        keys = [(b.total, b.c_tau, k) for k, b in enumerate(breakdowns)]
        idx = keys.index(min(keys))
        return idx, breakdowns[idx]
    if method == "geometry":
        scores = [geometry_score(g, cloud) for g in candidates]
        idx = int(np.argmax(scores))
    elif method == "surrogate":
        if model is None:
            raise InvalidInputError("surrogate method requires a trained model")
        predicted = []
        for g in candidates:
            x = featurize(g, cloud, traj, scn.omega, scn.body, targets=targets)
            c_tau, c_slip, c_align = forward(model, x)
            predicted.append(CostBreakdown.of(c_tau, c_slip, c_align, scn.weights))
        keys = [(b.total, b.c_tau, k) for k, b in enumerate(predicted)]
        idx = keys.index(min(keys))
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    g = candidates[idx]
    breakdown = analytic_cost(g, traj, scn.omega, scn.body, scn.weights,
                              targets=targets, impulse_dt=scn.impulse_dt)
    return idx, breakdown


def run_comparison(scenarios, methods, trials: int, model: MlpModel = None):
    """Selection-vs-outcome suite: one shared candidate set per trial.

    Returns TrialRecords sorted by (scenario, method, trial); an empty
    candidate draw is recorded as a failed trial with status
    "no_candidates" rather than raising.
    """
    records = []
    for scn in scenarios:
        cloud = scn.cloud()
        traj = scn.trajectory()
        targets = scn.targets()
        ctx = (scn, cloud, traj, targets)
        for trial in range(trials):
            seed = trial_seed(scn, trial)
            candidates = scn.candidates(cloud, seed)
            chash = candidate_set_hash(candidates)
            for method in methods:
                if not candidates:
                    records.append(TrialRecord(
                        scenario=scn.name, method=method, trial=trial, seed=seed,
                        grasp_index=-1, candidate_hash=chash, tau_max=math.nan,
                        s_max=math.nan, alpha_max=math.nan, failed=True,
                        c_tau=math.nan, c_slip=math.nan, c_align=math.nan,
                        total=math.nan, lever=math.nan, status="no_candidates"))
                    continue
                idx, b = _select(method, candidates, ctx, model)
                g = candidates[idx]
                metrics = rollout(scn.tool, scn.body, g, traj, scn.omega,
                                  scn.sim, targets=targets)
                lever = float(np.linalg.norm(scn.omega.c_tool - g.pose.translation))
                records.append(TrialRecord(
                    scenario=scn.name, method=method, trial=trial, seed=seed,
                    grasp_index=idx, candidate_hash=chash,
                    tau_max=metrics.tau_max, s_max=metrics.s_max,
                    alpha_max=metrics.alpha_max, failed=metrics.failed,
                    c_tau=b.c_tau, c_slip=b.c_slip, c_align=b.c_align,
                    total=b.total, lever=lever))
    records.sort(key=lambda r: (r.scenario, r.method, r.trial))
    return records


def grasp_survey(scn: Scenario, count: int, seed: int = None):
    """Roll every sampled candidate (not just selections) through the
    simulator on the fixed contact/trajectory; feeds the phase diagram."""
    seed = scn.seeds[0] if seed is None else seed
    cloud = scn.cloud()
    traj = scn.trajectory()
    targets = scn.targets()
    candidates = scn.candidates(cloud, seed)
    extra_seed = seed
    while len(candidates) < count:
        extra_seed += 1
        more = scn.candidates(cloud, extra_seed)
        if not more:
            break
        candidates.extend(more)
    candidates = candidates[:count]
    chash = candidate_set_hash(candidates)
    records = []
    for k, g in enumerate(candidates):
        b = analytic_cost(g, traj, scn.omega, scn.body, scn.weights,
                          targets=targets, impulse_dt=scn.impulse_dt)
        metrics = rollout(scn.tool, scn.body, g, traj, scn.omega, scn.sim,
                          targets=targets)
        lever = float(np.linalg.norm(scn.omega.c_tool - g.pose.translation))
        records.append(TrialRecord(
            scenario=scn.name, method="survey", trial=k, seed=seed,
            grasp_index=k, candidate_hash=chash, tau_max=metrics.tau_max,
            s_max=metrics.s_max, alpha_max=metrics.alpha_max,
            failed=metrics.failed, c_tau=b.c_tau, c_slip=b.c_slip,
            c_align=b.c_align, total=b.total, lever=lever))
    return records


def phase_diagram(records):
    """Torque-slip scatter plus per-method Spearman rank correlation.

    Returns (rows, correlations) where rows are (tau_max, s_max, failed,
    method) tuples and correlations map method -> rho (None when the
    ranks are degenerate, e.g. constant slip).
    """
    records = [r for r in records if r.status == "ok"]
    if len(records) < 30:
        raise InvalidInputError("phase diagram needs at least 30 records")
    rows = [(r.tau_max, r.s_max, r.failed, r.method) for r in records]
    corr = {}
    for method in sorted({r.method for r in records}):
        sub = [r for r in records if r.method == method]
        tau = np.array([r.tau_max for r in sub])
        s = np.array([r.s_max for r in sub])
        if len(sub) < 3 or np.ptp(tau) == 0.0 or np.ptp(s) == 0.0:
            corr[method] = None
            continue
        rho = stats.spearmanr(tau, s).statistic
        corr[method] = None if math.isnan(rho) else float(rho)
    return rows, corr


@dataclass(frozen=True)
class ThresholdFit:
    """Logistic failure boundary p(fail | tau) = sigmoid(a (tau - b))."""

    slope: float
    midpoint: float
    slope_se: float
    converged: bool
    separation: bool
    n: int
    goodness: float                      # McFadden pseudo R^2
    midpoint_interval: tuple = None      # only under perfect separation

    def to_dict(self) -> dict:
        return {"schema_version": 1, "slope": self.slope,
                "midpoint_nm": self.midpoint, "slope_se": self.slope_se,
                "converged": self.converged, "separation": self.separation,
                "n": self.n, "goodness_mcfadden": self.goodness,
                "midpoint_interval_nm": (list(self.midpoint_interval)
                                         if self.midpoint_interval else None)}


def threshold_fit(records, tol: float = 1e-8, max_iter: int = 100) -> ThresholdFit:
    """Maximum-likelihood logistic fit of failure probability against
    peak torque, by Newton iterations to tolerance 1e-8.

    The midpoint b is the empirical 50% failure threshold. Perfectly
    separable data is reported with a separation flag and an interval
    estimate for b instead of a divergent slope.
    """
    records = [r for r in records if r.status == "ok"]
    tau = np.array([r.tau_max for r in records])
    y = np.array([1.0 if r.failed else 0.0 for r in records])
    if len(tau) < 4:
        raise InvalidInputError("threshold fit needs at least 4 records")
    if y.min() == y.max():
        raise InvalidInputError("threshold fit needs both outcome classes")

    lo = tau[y == 1].min()
    hi = tau[y == 0].max()
    if lo > hi:
        # perfect separation: slope is unbounded, bracket the midpoint
        mid = 0.5 * (hi + lo)
        return ThresholdFit(slope=math.inf, midpoint=mid, slope_se=math.nan,
                            converged=True, separation=True, n=len(tau),
                            goodness=1.0, midpoint_interval=(hi, lo))

    # logit = w0 + w1 * tau
    X = np.column_stack([np.ones_like(tau), tau])
    w = np.zeros(2)
    converged = False
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-np.clip(X @ w, -500, 500)))
        grad = X.T @ (y - p)
        W = np.maximum(p * (1.0 - p), 1e-12)
        H = (X * W[:, None]).T @ X
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            break
        w = w + step
        if float(np.linalg.norm(step)) < tol:
            converged = True
            break
    a = float(w[1])
    b = float(-w[0] / w[1]) if w[1] != 0.0 else math.nan
    p = 1.0 / (1.0 + np.exp(-np.clip(X @ w, -500, 500)))
    W = np.maximum(p * (1.0 - p), 1e-12)
    H = (X * W[:, None]).T @ X
    try:
        cov = np.linalg.inv(H)
        se_a = float(math.sqrt(max(cov[1, 1], 0.0)))
    except np.linalg.LinAlgError:
        se_a = math.nan
    eps = 1e-12
    ll = float(np.sum(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
    base = y.mean()
    ll0 = float(len(y) * (base * math.log(base + eps)
                          + (1 - base) * math.log(1 - base + eps)))
    goodness = 1.0 - ll / ll0 if ll0 != 0.0 else math.nan
    return ThresholdFit(slope=a, midpoint=b, slope_se=se_a, converged=converged,
                        separation=False, n=len(tau), goodness=goodness)

"""Relaxation-limit studies, the two-parameter stability inequality and uniqueness probes.

A sweep runs the scheme for a decreasing sequence of one relaxation
parameter (or both), compares every run against the directly computed limit
problem (parameter set to 0) in discrete ``L^2(Q)`` norms and fits observed
log-log slopes.  Rates are empirical: the convergence results give none.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assumptions import AssumptionCheck, check_assumptions
from .diagnostics import dual_l2q_distance, l2q_distance, residual_report
from .errors import AssumptionError, ConfigError, FracgrowError
from .scheme import simulate

__all__ = [
    "REGIMES",
    "SweepPlan",
    "SweepRow",
    "ConvergenceTable",
    "StabilityReport",
    "UniquenessReport",
    "AssumptionCheck",
    "check_assumptions",
    "guard_regime",
    "run_sweep",
    "run_many",
    "stability_check",
    "uniqueness_probe",
    "pairwise_differences",
]

REGIMES = ("alpha_to_zero", "beta_to_zero", "joint")


def default_workers():
    env = os.environ.get("FRACGROW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"FRACGROW_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _run_one(cfg):
    try:
        return simulate(cfg)
    except FracgrowError as exc:
        return exc


def run_many(cfgs, workers=None):
    """Simulate independent configurations, in parallel when ``workers > 1``.

    Failed runs come back as the raised exception instead of a trajectory.
    """
    workers = default_workers() if workers is None else workers
    cfgs = list(cfgs)
    if workers <= 1 or len(cfgs) <= 1:
        return [_run_one(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=min(workers, len(cfgs))) as pool:
        return list(pool.map(_run_one, cfgs))


@dataclass(frozen=True, eq=False)
class SweepPlan:
    """Sequence of vanishing relaxation parameters.

    ``fixed`` is the value of the parameter that is held (``beta`` for
    ``alpha_to_zero``, ``alpha`` for ``beta_to_zero``; ignored for ``joint``).
    ``reference`` is ``"limit"`` (parameter set to 0) or ``"finest"``.
    """

    regime: str
    values: tuple
    base: object
    fixed: float | None = None
    reference: str = "limit"

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ConfigError("sweep needs at least one parameter value")
        if any(not 0 < v <= 1 for v in vals) or any(b >= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("sweep values must be strictly decreasing in (0, 1]")
        if self.reference not in ("limit", "finest"):
            raise ConfigError(f"unknown reference {self.reference!r}")
        object.__setattr__(self, "values", vals)
        if self.fixed is None and self.regime != "joint":
            held = self.base.beta if self.regime == "alpha_to_zero" else self.base.alpha
            object.__setattr__(self, "fixed", float(held))

    def config_for(self, value):
        if self.regime == "alpha_to_zero":
            return self.base.with_params(alpha=value, beta=self.fixed)
        if self.regime == "beta_to_zero":
            return self.base.with_params(alpha=self.fixed, beta=value)
        return self.base.with_params(alpha=value, beta=value)


def guard_regime(regime, cfg):
    """Raise ``AssumptionError`` when ``cfg`` lacks the hypothesis the regime needs."""
    chk = check_assumptions(cfg)
    if regime == "alpha_to_zero" and not chk.a5_cases:
        raise AssumptionError("(A5)", "none of lambda_1 > 0, P >= P0 > 0, or the "
                              "Neumann/growth condition holds")
    if regime == "beta_to_zero" and not chk.a6_ok:
        raise AssumptionError("(A6)", f"alpha L = {chk.alpha_L:g} is not below 1")
    if regime == "joint" and not chk.a7_ok:
        raise AssumptionError("(A7)", f"lambda_1 of A is {chk.lambda1_A:g}, not positive")
    return chk


@dataclass(frozen=True)
class SweepRow:
    value: float
    phi_l2: float
    mu_l2: float
    mu_dual: float
    S_l2: float
    rate: float
    failed: bool = False


@dataclass(eq=False)
class ConvergenceTable:
    regime: str
    reference: str
    rows: list
    checks: AssumptionCheck
    reference_residual: float = math.nan
    reference_agreement: float = math.nan
    notes: list = field(default_factory=list)

    COLUMNS = ("value", "phi_l2", "mu_l2", "mu_dual", "S_l2", "rate", "failed")

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def monotone(self):
        d = self.column("phi_l2")
        return bool(np.all(np.isfinite(d)) and np.all(np.diff(d) < 0))

    @property
    def first_last_ratio(self):
        d = self.column("phi_l2")
        return float(d[0] / d[-1]) if d[-1] > 0 else math.inf

    def verdict(self):
        rates = [r.rate for r in self.rows[1:]]
        return {
            "regime": self.regime,
            "reference": self.reference,
            "strictly_decreasing": self.monotone,
            "first_last_ratio": self.first_last_ratio,
            "observed_rates": rates,
            "failed_values": [r.value for r in self.rows if r.failed],
            "reference_max_residual": self.reference_residual,
            "limit_vs_finest_phi_l2": self.reference_agreement,
            "assumptions": self.checks.to_dict(),
            "notes": list(self.notes),
        }

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for r in self.rows:
            writer.writerow([format(float(getattr(r, c)), ".17g") if c != "failed" else int(r.failed)
                             for c in self.COLUMNS])
        return buf.getvalue()


def _observed_rate(d0, d1, v0, v1):
    if not (d0 > 0 and d1 > 0):
        return math.nan
    return math.log(d0 / d1) / math.log(v0 / v1)


def run_sweep(plan, workers=None):
    """Simulate every parameter value and the reference and tabulate distances.

    Raises
    ------
    AssumptionError
        When the regime's hypothesis fails for the base configuration.
    """
    checks = guard_regime(plan.regime, plan.config_for(plan.values[0]))
    limit_cfg = plan.config_for(0.0)
    cfgs = [plan.config_for(v) for v in plan.values] + [limit_cfg]
    runs = run_many(cfgs, workers)
    limit = runs[-1]
    if isinstance(limit, Exception):
        raise limit
    members = runs[:-1]
    finest = members[-1]
    ref = limit if plan.reference == "limit" else finest

    rows = []
    prev = None
    for v, tr in zip(plan.values, members):
        if isinstance(tr, Exception):
            rows.append(SweepRow(v, math.nan, math.nan, math.nan, math.nan, math.nan, True))
            prev = None
            continue
        d = SweepRow(v, l2q_distance(tr, ref, "phi"), l2q_distance(tr, ref, "mu"),
                     dual_l2q_distance(tr, ref, "mu"), l2q_distance(tr, ref, "S"), math.nan)
        if prev is not None:
            d = SweepRow(d.value, d.phi_l2, d.mu_l2, d.mu_dual, d.S_l2,
                         _observed_rate(prev.phi_l2, d.phi_l2, prev.value, d.value))
        rows.append(d)
        prev = d

    table = ConvergenceTable(plan.regime, plan.reference, rows, checks)
    rr = residual_report(limit)
    table.reference_residual = max(rr.mu_residual, rr.phi_residual, rr.S_residual)
    if not isinstance(finest, Exception):
        table.reference_agreement = l2q_distance(limit, finest, "phi")
    table.notes.append("rates are observed log-log slopes between consecutive rows")
    return table


def pairwise_differences(trajs, field="phi"):
    """Matrix of discrete ``L^2(Q)`` distances between all pairs of trajectories."""
    n = len(trajs)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = l2q_distance(trajs[i], trajs[j], field)
    return D


@dataclass(eq=False)
class StabilityReport:
    """Terms of the two-parameter stability inequality at every ``t_n``.

    ``margin = rhs - lhs`` where the unknown ``M_hat |alpha1 - alpha2|`` term
    is left out; it is exact when ``alpha1 == alpha2``.  For distinct alphas
    ``implied_M_hat`` is the smallest constant making the inequality hold.
    """

    times: np.ndarray
    lhs: np.ndarray
    w_term: np.ndarray
    beta_term: np.ndarray
    margin: np.ndarray
    alpha_gap: float
    implied_M_hat: float
    coefficient: float
    delta: float

    @property
    def min_margin(self):
        return float(self.margin[1:].min()) if self.margin.size > 1 else 0.0

    def rows(self):
        return [(float(t), float(a), float(b), float(c), float(m))
                for t, a, b, c, m in zip(self.times, self.lhs, self.w_term, self.beta_term, self.margin)]


def stability_check(traj1, traj2, delta):
    """Evaluate both sides of the stability inequality relating two ``(alpha, beta)`` runs."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    c1, c2 = traj1.cfg, traj2.cfg
    if (c1.op_A.basis.key != c2.op_A.basis.key or c1.op_B.basis.key != c2.op_B.basis.key
            or c1.h != c2.h or traj1.n_states != traj2.n_states):
        raise ValueError("trajectories must share the spatial and temporal discretization")
    A, B = c1.op_A.basis, c1.op_B.basis
    h = c1.h
    quad = B.integrate

    phi1, phi2 = B.synthesize(traj1.phi), B.synthesize(traj2.phi)
    w1 = c1.alpha * A.synthesize(traj1.mu) + phi1
    w2 = c2.alpha * A.synthesize(traj2.mu) + phi2
    e_sq = np.array([quad(d * d) for d in phi1 - phi2])
    w_sq = np.array([quad(d * d) for d in w1 - w2])
    dphi2 = np.diff(traj2.phi, axis=0) / h
    dphi2_norm = np.concatenate([[0.0], np.sqrt((dphi2 ** 2).sum(axis=1))])

    coef = 1.0 - c1.alpha * c1.potential.lipschitz - delta
    cum = lambda v: h * np.concatenate([[0.0], np.cumsum(v[1:])])  # noqa: E731
    lhs = coef * cum(e_sq)
    w_term = cum(w_sq) / (4.0 * delta)
    beta_term = c1.alpha * abs(c1.beta - c2.beta) * cum(dphi2_norm * np.sqrt(e_sq))
    margin = w_term + beta_term - lhs
    gap = abs(c1.alpha - c2.alpha)
    if gap > 0:
        implied = float(max(0.0, np.max(-margin)) / gap)
    else:
        implied = 0.0
    return StabilityReport(traj1.times.copy(), lhs, w_term, beta_term, margin, gap, implied, coef, delta)


@dataclass(frozen=True)
class UniquenessReport:
    kind: str
    regime_condition: str
    max_divergence: float
    divergences: tuple
    ratio: float | None = None


def _uniqueness_condition(cfg, chk):
    if cfg.alpha == 0 and cfg.beta == 0:
        return "(A8)", chk.a8_ok
    if cfg.alpha > 0 and cfg.beta == 0:
        return "(A6)+embedABC proxy", chk.a6_ok and chk.embed_abc
    if cfg.alpha > 0 and cfg.beta > 0:
        return "embedAC", chk.embed_ac
    return "none available for alpha = 0, beta > 0", False


def uniqueness_probe(cfg, perturbation_kind="newton_seed", seeds=(1, 2), force=False):
    """Re-solve ``cfg`` under perturbations and report how far the trajectories drift apart.

    ``newton_seed``: Newton solves start from randomly perturbed iterates, one
    run per seed; divergence is the largest ``L^2(Q)`` distance between runs.
    ``yosida_halving``: runs at ``lam, lam/2, lam/4``; reports the two
    successive distances and their ratio (about 2 for an ``O(lam)`` effect).
    """
    chk = check_assumptions(cfg)
    name, ok = _uniqueness_condition(cfg, chk)
    if not ok and not force:
        raise AssumptionError(name, "uniqueness hypothesis of this regime is not satisfied")
    if perturbation_kind == "newton_seed":
        runs = [simulate(cfg, guess_seed=cfg.seed * 7919 + s) for s in seeds]
        divs = [max(l2q_distance(runs[0], r, f) for f in ("mu", "phi", "S")) for r in runs[1:]]
        return UniquenessReport(perturbation_kind, name, max(divs), tuple(divs))
    if perturbation_kind == "yosida_halving":
        if not cfg.potential.is_smooth:
            raise ConfigError("Yosida halving probe needs a C^1 potential")
        runs = [simulate(cfg.with_params(lam=cfg.lam / 2 ** k)) for k in range(3)]
        divs = [math.sqrt(sum(l2q_distance(a, b, f) ** 2 for f in ("mu", "phi", "S")))
                for a, b in zip(runs, runs[1:])]
        ratio = divs[0] / divs[1] if divs[1] > 0 else math.inf
        return UniquenessReport(perturbation_kind, name, max(divs), tuple(divs), ratio)
    raise ConfigError(f"unknown perturbation kind {perturbation_kind!r}")

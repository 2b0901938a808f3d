"""Self-contained invariant suites run by ``fracgrow verify``.

Every check returns a :class:`CheckResult` with the measured error, the
tolerance and the elapsed time; a suite passes when all its checks do.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .diagnostics import mean_drift
from .potentials import Potential, Proliferation
from .scheme import ProblemConfig, simulate
from .spectral import (
    Field,
    FractionalOperator,
    apply_fractional,
    inner,
    make_interval_basis,
    norms,
    resolvent_apply,
)

__all__ = [
    "CheckResult",
    "operator_suite",
    "yosida_suite",
    "conservation_suite",
    "linear_oracle_suite",
    "linear_oracle_error",
    "prox_oracle",
    "run_all",
]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    error: float
    tol: float
    seconds: float

    @property
    def passed(self):
        return bool(np.isfinite(self.error) and self.error <= self.tol)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.suite}/{self.name}: error={self.error:.3e} tol={self.tol:.1e} ({self.seconds:.2f}s)"


class _Timer:
    def __init__(self):
        self.t0 = time.perf_counter()

    def lap(self):
        t = time.perf_counter()
        dt, self.t0 = t - self.t0, t
        return dt


def _rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def operator_suite(n_modes=32, seed=0, tol=1e-10):
    """Composition, resolvent round trip, Green formula and eigenmode norm duality."""
    rng = np.random.default_rng(seed)
    out = []
    clock = _Timer()
    for boundary in ("neumann", "dirichlet"):
        basis = make_interval_basis(boundary, n_modes)
        # decaying coefficients keep high-mode products representable
        v = Field(basis, rng.standard_normal(n_modes) / np.arange(1, n_modes + 1) ** 2)
        w = Field(basis, rng.standard_normal(n_modes) / np.arange(1, n_modes + 1) ** 2)
        r1, r2 = 0.3, 0.7
        op1, op2, op12 = (FractionalOperator(basis, r) for r in (r1, r2, r1 + r2))
        comp = apply_fractional(op1, apply_fractional(op2, v))
        out.append(CheckResult("operator", f"{boundary}/composition",
                               _rel(comp.coefficients, apply_fractional(op12, v).coefficients), tol, clock.lap()))

        eps = 0.7
        u = resolvent_apply(op1, eps, v)
        back = eps * u.coefficients + apply_fractional(op1, u).coefficients
        out.append(CheckResult("operator", f"{boundary}/resolvent_roundtrip",
                               _rel(back, v.coefficients), tol, clock.lap()))

        lhs = inner(apply_fractional(op12, v), w)
        rhs = inner(apply_fractional(op1, v), apply_fractional(op2, w))
        out.append(CheckResult("operator", f"{boundary}/green_formula",
                               abs(lhs - rhs) / max(1.0, abs(lhs)), tol, clock.lap()))

        err = 0.0
        for j in range(1, n_modes + 1):
            nm = norms(Field.eigenmode(basis, j), op1)
            err = max(err, abs(nm.graph_norm * nm.dual_norm - 1.0))
        out.append(CheckResult("operator", f"{boundary}/norm_duality", err, tol, clock.lap()))
    return out


def _samples(potential, n):
    lo, hi = potential.domain
    if np.isfinite(lo):
        return np.linspace(lo, hi, n + 2)[1:-1]
    return np.linspace(-3.0, 3.0, n)


def prox_oracle(potential, lam, s, grid_points=2001):
    """``min_y F1(y) + (y - s)^2/(2 lam)`` by grid search refined with bounded Brent.

    Returns ``(argmin, value)`` arrays.
    """
    lo, hi = potential.domain
    lo, hi = (max(lo, -10.0), min(hi, 10.0))
    grid = np.linspace(lo, hi, grid_points)
    F_grid = potential.F1(grid)
    ys, vals = [], []
    for si in np.atleast_1d(s):
        obj = lambda y: float(potential.F1(y)) + (y - si) ** 2 / (2.0 * lam)  # noqa: E731
        k = int(np.argmin(F_grid + (grid - si) ** 2 / (2.0 * lam)))
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid_points - 1)]
        res = minimize_scalar(obj, bounds=(a, b), method="bounded", options={"xatol": 1e-13})
        cands = [(res.fun, res.x), (obj(a), a), (obj(b), b)]
        v, y = min(cands)
        ys.append(y)
        vals.append(v)
    return np.array(ys), np.array(vals)


def yosida_suite(lams=(1e-3, 1e-2, 1e-1), n_samples=200, chain_tol=1e-9, prox_tol=1e-8):
    """Inequality chain, monotonicity, Lipschitz bound and prox oracle for the three potentials."""
    out = []
    clock = _Timer()
    for kind in ("regular", "logarithmic", "double_obstacle"):
        pot = Potential(kind)
        for lam in lams:
            tag = f"{kind}/lam={lam:g}"
            s = _samples(pot, n_samples)
            J = pot.resolvent(lam, s)
            a, b, c = pot.F1(J), pot.yosida_F1(lam, s), pot.F1(s)
            slack = min(float(np.min(a)), float(np.min(b - a)), float(np.min(c - b)))
            out.append(CheckResult("yosida", f"{tag}/chain", max(0.0, -slack), chain_tol, clock.lap()))

            s_all = np.linspace(-3.0, 3.0, n_samples)
            f = pot.yosida_f1(lam, s_all)
            df = np.diff(f)
            ds = np.diff(s_all)
            mono = max(0.0, -float(np.min(df)))
            lip = max(0.0, float(np.max(np.abs(df) - ds / lam)))
            out.append(CheckResult("yosida", f"{tag}/monotone", mono, chain_tol, clock.lap()))
            out.append(CheckResult("yosida", f"{tag}/lipschitz", lip * lam, chain_tol, clock.lap()))

            _, v_ref = prox_oracle(pot, lam, s_all)
            v = pot.yosida_F1(lam, s_all)
            err = float(np.max(np.abs(v - v_ref) / (1.0 + np.abs(v_ref))))
            out.append(CheckResult("yosida", f"{tag}/prox_oracle", err, prox_tol, clock.lap()))
    return out


def _desk_config(n_modes=32, T=0.25, h=1e-3, alpha=0.5, beta=0.5, boundaries=("neumann",) * 3):
    bases = [make_interval_basis(b, n_modes) for b in boundaries]
    ops = [FractionalOperator(b, 0.5) for b in bases]
    B = bases[1]
    x = B.points[:, 0]
    return ProblemConfig(ops[0], ops[1], ops[2], alpha, beta, Potential("regular"), 1e-2, Proliferation(),
                         np.zeros(n_modes), B.analyze(0.8 * np.tanh((x - 0.5) / 0.1)),
                         bases[2].analyze(np.ones_like(x)), T, h)


def conservation_suite(cfg=None):
    """Drift of ``mean(alpha mu + phi + S)`` for Neumann ``A`` and ``C`` without forcing."""
    usable = (cfg is not None and mean_drift_applicable(cfg))
    run_cfg = cfg if usable else _desk_config()
    clock = _Timer()
    tr = simulate(run_cfg)
    drift = mean_drift(tr)
    return [CheckResult("conservation", "mean_drift", drift, run_cfg.n_steps * run_cfg.newton_tol, clock.lap())]


def mean_drift_applicable(cfg):
    return (cfg.op_A.basis.eigenvalues[0] == 0 and cfg.op_C.basis.eigenvalues[0] == 0
            and cfg.forcing_mu is None and cfg.forcing_phi is None and cfg.forcing_S is None)


def linear_oracle_error(cfg):
    """Max relative deviation of a linear run from the per-mode 2x2 backward Euler recursion.

    Requires ``P = 0``, the quadratic test potential and one shared basis; then
    ``f1_lam(s) = s / (1 + lam)`` and every mode evolves independently.
    """
    tr = simulate(cfg)
    a, b, c = (op.multipliers(2.0) for op in (cfg.op_A, cfg.op_B, cfg.op_C))
    h, al, be = cfg.h, cfg.alpha, cfg.beta
    k = 1.0 / (1.0 + cfg.lam)
    mu, phi, S = tr.mu[0].copy(), tr.phi[0].copy(), tr.S[0].copy()
    err = 0.0
    for n in range(1, tr.n_states):
        m11, m12 = al / h + a, np.full_like(a, 1.0 / h)
        m21, m22 = -np.ones_like(a), be / h + b + k
        r1, r2 = al * mu / h + phi / h, be * phi / h
        det = m11 * m22 - m12 * m21
        mu, phi = (r1 * m22 - m12 * r2) / det, (m11 * r2 - m21 * r1) / det
        S = S / (1.0 + h * c)
        ref = np.concatenate([mu, phi, S])
        err = max(err, _rel(tr.stacked(n), ref))
    return err


def linear_oracle_suite(n_modes=32, T=0.25, h=1e-3, tol=1e-10):
    out = []
    clock = _Timer()
    basis = make_interval_basis("neumann", n_modes)
    x = basis.points[:, 0]
    phi0 = basis.analyze(0.5 * np.cos(np.pi * x) + 0.2 * np.cos(3 * np.pi * x))
    for al, be in ((0.5, 0.5), (0.25, 0.0), (0.0, 0.5)):
        cfg = ProblemConfig(FractionalOperator(basis, 0.5), FractionalOperator(basis, 0.6),
                            FractionalOperator(basis, 0.4), al, be, Potential("quadratic_test"), 1e-2,
                            Proliferation(p0=0.0), basis.analyze(0.1 * np.cos(2 * np.pi * x)), phi0,
                            basis.analyze(np.ones_like(x)), T, h)
        out.append(CheckResult("linear_oracle", f"alpha={al:g},beta={be:g}", linear_oracle_error(cfg), tol,
                               clock.lap()))
    return out


def run_all(cfg=None):
    """All suites; ``cfg`` (if given and applicable) drives the conservation check."""
    return operator_suite() + yosida_suite() + conservation_suite(cfg) + linear_oracle_suite()

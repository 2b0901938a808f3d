"""Acceptance gate: every criterion at its stated tolerance on the desk configuration
(1D, N = 32, T = 0.25, h = 1e-3 unless stated).  Each test records one PASS/FAIL line,
listed in the pytest terminal summary."""

import math
import statistics
import time

import numpy as np
import pytest

from conftest import record
from fracgrow.asymptotics import SweepPlan, run_many, run_sweep, stability_check, uniqueness_probe
from fracgrow.cli import main
from fracgrow.config import consistent_mu0
from fracgrow.diagnostics import apriori_report, mean_drift
from fracgrow.potentials import Potential, Proliferation
from fracgrow.scheme import ProblemConfig, simulate
from fracgrow.spectral import FractionalOperator, make_interval_basis
from fracgrow.verification import linear_oracle_error, operator_suite, yosida_suite

N, T, H = 32, 0.25, 1e-3
SWEEP = [2.0**-n for n in range(1, 7)]

pytestmark = pytest.mark.slow


def desk(boundaries=("neumann",) * 3, alpha=0.5, beta=0.5, potential="regular", proliferation=None,
         phi=None, consistent=False, n_modes=N, h=H, lam=1e-2):
    bases = [make_interval_basis(b, n_modes) for b in boundaries]
    ops = [FractionalOperator(b, 0.5) for b in bases]
    B = bases[1]
    x = B.points[:, 0]
    phi0 = B.analyze(0.8 * np.tanh((x - 0.5) / 0.1) if phi is None else phi(x))
    pot = Potential(potential)
    mu0 = consistent_mu0(ops[0], ops[1], pot, lam, phi0) if consistent else np.zeros(n_modes)
    return ProblemConfig(ops[0], ops[1], ops[2], alpha, beta, pot, lam, proliferation or Proliferation(),
                         mu0, phi0, bases[2].analyze(np.ones_like(x)), T, h)


def smooth_sine(x):
    return 0.6 * np.sin(np.pi * x) - 0.3 * np.sin(3 * np.pi * x)


def smooth_cosine(x):
    return 0.6 * np.cos(np.pi * x) - 0.2 * np.cos(3 * np.pi * x)


def fmt(d):
    return "[" + " ".join(f"{v:.2e}" for v in d) + "]"


def sweep_verdict(table):
    d = table.column("phi_l2")
    return table.monotone and table.first_last_ratio >= 10, d


def test_c01_operator_calculus():
    t0 = time.perf_counter()
    res = operator_suite(n_modes=N, tol=1e-10)
    dt = time.perf_counter() - t0
    worst = max(r.error for r in res)
    ok = all(r.passed for r in res) and dt < 1.0
    assert record(1, ok, f"operator calculus max rel error {worst:.2e} <= 1e-10, {len(res)} checks, {dt:.3f}s < 1s")


def test_c02_yosida_suite():
    t0 = time.perf_counter()
    res = yosida_suite(lams=(1e-3, 1e-2, 1e-1), n_samples=200, chain_tol=1e-9, prox_tol=1e-8)
    dt = time.perf_counter() - t0
    bad = [r.name for r in res if not r.passed]
    prox = max(r.error for r in res if r.name.endswith("prox_oracle"))
    ok = not bad and dt < 5.0
    assert record(2, ok, f"Yosida chain/monotone/Lipschitz/prox over 3x3x200, max prox error {prox:.2e}, "
                         f"failures {bad}, {dt:.2f}s < 5s")


def test_c03_linear_regime_exactness():
    basis = make_interval_basis("neumann", N)
    x = basis.points[:, 0]
    errs = []
    for exps in ((0.5, 0.5, 0.5), (0.3, 0.7, 1.0)):
        ops = [FractionalOperator(basis, r) for r in exps]
        cfg = ProblemConfig(*ops, 0.5, 0.5, Potential("quadratic_test"), 1e-2, Proliferation(p0=0.0),
                            basis.analyze(0.2 * np.cos(2 * np.pi * x)), basis.analyze(smooth_cosine(x)),
                            basis.analyze(np.ones_like(x)), T, H)
        assert cfg.n_steps == 250
        errs.append(linear_oracle_error(cfg))
    ok = max(errs) <= 1e-10
    assert record(3, ok, f"per-mode 2x2 backward Euler oracle over 250 steps, max rel error {max(errs):.2e} <= 1e-10")


def test_c04_conservation():
    cfg = desk()
    drift = mean_drift(simulate(cfg))
    bound = 250 * cfg.newton_tol
    assert record(4, drift <= bound, f"mean(alpha mu + phi + S) drift {drift:.2e} <= {bound:.1e}")


def test_c05_self_convergence():
    t0 = time.perf_counter()
    base = desk(n_modes=16, phi=smooth_cosine, h=4e-3)
    runs = [simulate(base.with_params(h=h)) for h in (4e-3, 2e-3, 1e-3)]
    stride = [1, 2, 4]
    X = [np.hstack([r.mu[::s], r.phi[::s], r.S[::s]]) for r, s in zip(runs, stride)]
    d1 = math.sqrt(4e-3 * np.sum((X[0] - X[1])[1:] ** 2))
    d2 = math.sqrt(4e-3 * np.sum((X[1] - X[2])[1:] ** 2))
    order = math.log2(d1 / d2)
    dt = time.perf_counter() - t0
    ok = 0.8 <= order <= 1.2 and dt < 30
    assert record(5, ok, f"self-convergence order {order:.3f} in [0.8, 1.2], {dt:.1f}s < 30s")


def test_c06_apriori_uniformity():
    t0 = time.perf_counter()
    grid = [2.0**-k for k in range(7)]
    base = desk()
    cfgs = [base.with_params(alpha=a, beta=b) for a in grid for b in grid]
    runs = run_many(cfgs)
    failed = [c for c, r in zip(cfgs, runs) if isinstance(r, Exception)]
    reps = [apriori_report(r) for r in runs if not isinstance(r, Exception)]
    finite = all(math.isfinite(v) for rep in reps for v in rep.lhs.values())
    K = [rep.implied_K1 for rep in reps]
    ratio = max(K) / statistics.median(K)
    dt = time.perf_counter() - t0
    ok = not failed and finite and len(reps) == 49 and ratio <= 10 and dt < 300
    assert record(6, ok, f"49 (alpha, beta) runs, all LHS finite={finite}, max/median implied K1 = "
                         f"{ratio:.2f} <= 10, {dt:.0f}s < 300s")


@pytest.mark.parametrize(
    "case, kwargs",
    [
        ("(A5)(i)", dict(boundaries=("dirichlet", "neumann", "neumann"))),
        ("(A5)(ii)", dict(proliferation=Proliferation("constant", 0.5))),
        ("(A5)(iii)", dict(proliferation=Proliferation("smooth_bump", 0.5))),
    ],
)
def test_c07_alpha_limit(case, kwargs):
    base = desk(beta=0.5, **kwargs)
    table = run_sweep(SweepPlan("alpha_to_zero", SWEEP, base))
    assert case[4:] in "".join(f"({c})" for c in table.checks.a5_cases)
    ok, d = sweep_verdict(table)
    assert record(7, ok, f"alpha-limit {case}: differences {fmt(d)} strictly "
                         f"decreasing={table.monotone}, first/last {table.first_last_ratio:.1f} >= 10")


def test_c08_beta_limit(tmp_path):
    base = desk(alpha=0.25, consistent=True)
    table = run_sweep(SweepPlan("beta_to_zero", SWEEP, base))
    ok, d = sweep_verdict(table)
    cfg = tmp_path / "a06.json"
    cfg.write_text('{"alpha": 0.6, "time": {"T": 0.25, "h": 0.001}}')
    code = main(["sweep", "--regime", "beta_to_zero", "--config", str(cfg), "--out", str(tmp_path / "o")])
    ok = ok and code == 4
    assert record(8, ok, f"beta-limit: differences {fmt(d)} strictly decreasing="
                         f"{table.monotone}, first/last {table.first_last_ratio:.1f} >= 10; alpha=0.6 exit code {code}")


def test_c08_refusal_names_A6(tmp_path, capsys):
    cfg = tmp_path / "a06.json"
    cfg.write_text('{"alpha": 0.6}')
    assert main(["sweep", "--regime", "beta_to_zero", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 4
    assert "(A6)" in capsys.readouterr().err


def test_c09_joint_limit():
    base = desk(boundaries=("dirichlet", "dirichlet", "dirichlet"), phi=smooth_sine, consistent=True)
    table = run_sweep(SweepPlan("joint", SWEEP, base))
    ok, d = sweep_verdict(table)
    assert record(9, ok, f"joint limit (A7): differences {fmt(d)} strictly decreasing="
                         f"{table.monotone}, first/last {table.first_last_ratio:.1f} >= 10")


def test_c10_stability_equal_alpha():
    base = desk(alpha=0.25)
    margins = []
    for b1, b2 in ((0.5, 0.25), (0.25, 0.125)):
        rep = stability_check(simulate(base.with_params(beta=b1)), simulate(base.with_params(beta=b2)), 0.25)
        margins.append(rep.min_margin)
    ok = min(margins) >= -1e-9
    assert record(10, ok, f"equal-alpha stability margins min over t_n {[f'{m:.2e}' for m in margins]} >= -1e-9")


def test_c11_uniqueness():
    a8 = desk(boundaries=("dirichlet", "dirichlet", "neumann"), alpha=0.0, beta=0.0)
    r1 = uniqueness_probe(a8, "newton_seed")
    r2 = uniqueness_probe(desk(), "newton_seed")
    r3 = uniqueness_probe(desk(), "yosida_halving")
    ok = r1.max_divergence <= 1e-8 and r2.max_divergence <= 1e-8 and 1.5 <= r3.ratio <= 2.5
    assert record(11, ok, f"seed divergence (A8) {r1.max_divergence:.1e}, relaxed {r2.max_divergence:.1e} <= 1e-8; "
                          f"lambda-halving ratio {r3.ratio:.3f} in [1.5, 2.5]")

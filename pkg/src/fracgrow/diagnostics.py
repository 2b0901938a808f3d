"""A posteriori reports on computed trajectories.

Time norms use the piecewise-constant reconstruction of implicit Euler:
``L^2(0,T;X)`` is ``sqrt(h * sum_{n>=1} |v_n|_X^2)``, ``L^inf`` is the maximum
over all stored levels and time derivatives are backward difference quotients.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .assumptions import check_assumptions
from .scheme import Discretization

__all__ = [
    "EstimateReport",
    "ResidualReport",
    "apriori_report",
    "residual_report",
    "lyapunov_values",
    "mean_drift",
    "l2q_distance",
    "dual_l2q_distance",
]


def _l2t(h, sq):
    """``sqrt(h * sum sq)`` over levels 1..N given squared spatial norms."""
    return float(math.sqrt(h * float(np.sum(sq[1:]))))


def l2q_distance(a, b, field="phi"):
    """Discrete ``L^2(Q)`` distance of one field between two trajectories on the same grid."""
    if a.n_states != b.n_states or a.cfg.h != b.cfg.h:
        raise ValueError("trajectories live on different time grids")
    d = a.field(field) - b.field(field)
    return _l2t(a.cfg.h, (d ** 2).sum(axis=1))


def dual_l2q_distance(a, b, field="mu"):
    """Distance in ``L^2(0,T;V^{-r})`` of the field's operator, a weaker metric."""
    op = {"mu": a.cfg.op_A, "phi": a.cfg.op_B, "S": a.cfg.op_C}[field]
    d = a.field(field) - b.field(field)
    return _l2t(a.cfg.h, (d ** 2 / (1.0 + op.multipliers(2.0))).sum(axis=1))


@dataclass(frozen=True)
class EstimateReport:
    """Discrete surrogates of the uniform a priori bound for one trajectory."""

    dt_w_dual_l2: float
    sqrt_alpha_mu_linf: float
    A_mu_l2: float
    sqrt_beta_dt_phi_l2: float
    phi_linf_VB: float
    F_phi_linf_L1: float
    S_H1_dual: float
    S_linf_H: float
    S_l2_VC: float
    S_norm: float
    P_exchange_l2: float
    lhs_total: float
    rhs_template: float
    implied_K1: float
    F_lambda_phi_linf_L1: float
    mean_drift: float | None
    constraint_violation: float
    max_newton_residual: float

    LHS_FIELDS = ("dt_w_dual_l2", "sqrt_alpha_mu_linf", "A_mu_l2", "sqrt_beta_dt_phi_l2",
                  "phi_linf_VB", "F_phi_linf_L1", "S_norm", "P_exchange_l2")

    @property
    def lhs(self):
        return {k: getattr(self, k) for k in self.LHS_FIELDS}

    def to_dict(self):
        return asdict(self)


def apriori_report(traj):
    """Evaluate the eight left-hand quantities of the a priori estimate and the implied constant."""
    cfg = traj.cfg
    h, alpha, beta = cfg.h, cfg.alpha, cfg.beta
    A, B, C = cfg.op_A.basis, cfg.op_B.basis, cfg.op_C.basis
    disc = Discretization(cfg)
    mA, mB, mC = (op.multipliers(2.0) for op in (cfg.op_A, cfg.op_B, cfg.op_C))
    pot, P = cfg.potential, cfg.proliferation

    w = alpha * traj.mu + traj.phi @ disc.T_AB.T
    dw = np.diff(w, axis=0) / h
    dw_dual = math.sqrt(h * float(np.sum(dw ** 2 / (1.0 + mA))))

    mu_h = np.sqrt((traj.mu ** 2).sum(axis=1))
    A_mu = _l2t(h, (mA * traj.mu ** 2).sum(axis=1))
    dphi = np.diff(traj.phi, axis=0) / h
    dphi_l2 = math.sqrt(h * float(np.sum(dphi ** 2)))
    phi_graph = np.sqrt(((1.0 + mB) * traj.phi ** 2).sum(axis=1))

    phi_grid = B.synthesize(traj.phi)
    F_l1 = np.array([B.integrate(np.abs(pot.F(g))) for g in phi_grid])
    C0 = _yosida_offset(cfg)
    Fl_l1 = np.array([B.integrate(np.abs(pot.yosida_F(cfg.lam, g) + C0)) for g in phi_grid])

    S_dual_sq = (traj.S ** 2 / (1.0 + mC)).sum(axis=1)
    dS = np.diff(traj.S, axis=0) / h
    S_H1 = math.sqrt(h * float(np.sum(S_dual_sq[1:])) + h * float(np.sum(dS ** 2 / (1.0 + mC))))
    S_linf = float(np.sqrt((traj.S ** 2).sum(axis=1)).max())
    S_VC = _l2t(h, ((1.0 + mC) * traj.S ** 2).sum(axis=1))

    gap = C.synthesize(traj.S) - A.synthesize(traj.mu)
    exch = np.array([B.integrate(P(g) * d ** 2) for g, d in zip(phi_grid, gap)])
    exch_l2 = _l2t(h, exch)

    vals = dict(
        dt_w_dual_l2=dw_dual,
        sqrt_alpha_mu_linf=math.sqrt(alpha) * float(mu_h.max()),
        A_mu_l2=A_mu,
        sqrt_beta_dt_phi_l2=math.sqrt(beta) * dphi_l2,
        phi_linf_VB=float(phi_graph.max()),
        F_phi_linf_L1=float(F_l1.max()),
        S_norm=S_H1 + S_linf + S_VC,
        P_exchange_l2=exch_l2,
    )
    lhs = float(sum(vals.values()))
    phi0_grid = B.synthesize(cfg.phi0)
    rhs = (math.sqrt(alpha) * float(np.linalg.norm(cfg.mu0))
           + float(np.sqrt((mB * cfg.phi0 ** 2).sum()))
           + float(B.integrate(np.abs(pot.F(phi0_grid))))
           + float(np.linalg.norm(cfg.S0)) + 1.0)
    viol = float(np.max(np.maximum(np.abs(phi_grid) - 1.0, 0.0))) \
        if pot.kind in ("double_obstacle", "logarithmic") else 0.0
    return EstimateReport(
        S_H1_dual=S_H1, S_linf_H=S_linf, S_l2_VC=S_VC,
        lhs_total=lhs, rhs_template=rhs, implied_K1=lhs / rhs,
        F_lambda_phi_linf_L1=float(Fl_l1.max()),
        mean_drift=mean_drift(traj),
        constraint_violation=viol,
        max_newton_residual=_max_step_residual(traj),
        **vals,
    )


def _max_step_residual(traj):
    # recomputed from stored states so a reloaded trajectory reports the same value
    r = residual_report(traj)
    return max(r.mu_residual, r.phi_residual, r.S_residual)


def _yosida_offset(cfg):
    """``C0 >= 0`` with ``F_lam + C0 >= 0`` (sampled on a wide range)."""
    s = np.linspace(-10.0, 10.0, 4001)
    return max(0.0, -float(np.min(cfg.potential.yosida_F(cfg.lam, s))))


def mean_drift(traj):
    """``max_n |mean(alpha mu + phi + S)(t_n) - mean(t_0)|`` when A and C are Neumann, else None."""
    cfg = traj.cfg
    A, B, C = cfg.op_A.basis, cfg.op_B.basis, cfg.op_C.basis
    if A.eigenvalues[0] != 0 or C.eigenvalues[0] != 0:
        return None
    vol = A.volume
    total = (cfg.alpha * B.integrate(A.synthesize(traj.mu)) + B.integrate(B.synthesize(traj.phi))
             + B.integrate(C.synthesize(traj.S))) / vol
    return float(np.max(np.abs(total - total[0])))


def lyapunov_values(traj):
    """``|B^sigma phi|^2 + 2 int F_lam(phi) + alpha |mu|^2`` at every stored level."""
    cfg = traj.cfg
    B = cfg.op_B.basis
    mB = cfg.op_B.multipliers(2.0)
    grid = B.synthesize(traj.phi)
    Fint = np.array([B.integrate(cfg.potential.yosida_F(cfg.lam, g)) for g in grid])
    return (mB * traj.phi ** 2).sum(axis=1) + 2.0 * Fint + cfg.alpha * (traj.mu ** 2).sum(axis=1)


@dataclass(frozen=True)
class ResidualReport:
    mu_residual: float
    phi_residual: float
    S_residual: float
    xi_consistency: float
    tol: float
    within_tol: bool
    constraint_violation: float
    legitimized_by: tuple

    def to_dict(self):
        d = asdict(self)
        d["legitimized_by"] = list(self.legitimized_by)
        return d


def residual_report(traj):
    """Recompute the per-equation step residuals from stored states.

    The first step of a run with ``alpha > 0, beta = 0`` starts from the
    projected consistent state stored at ``t = 0``, so every step is checked
    against the state actually stored before it.
    """
    cfg = traj.cfg
    disc = Discretization(cfg)
    r_max = np.zeros(3)
    for n in range(1, traj.n_states):
        r = disc.residual(traj.stacked(n), traj.stacked(n - 1), float(traj.times[n]))
        parts = disc.split(np.abs(r))
        r_max = np.maximum(r_max, [p.max() for p in parts])
    B = cfg.op_B.basis
    xi_ref = B.analyze(cfg.potential.yosida_f1(cfg.lam, B.synthesize(traj.phi)))
    xi_err = float(np.max(np.abs(traj.xi - xi_ref))) if traj.xi.size else 0.0
    chk = check_assumptions(cfg)
    legit = []
    if "i" in chk.a5_cases:
        legit.append("(A5)(i)")
    if "ii" in chk.a5_cases:
        legit.append("(A5)(ii)")
    if chk.a7_ok:
        legit.append("(A7)")
    viol = 0.0
    if cfg.potential.kind in ("double_obstacle", "logarithmic"):
        viol = float(np.max(np.maximum(np.abs(B.synthesize(traj.phi)) - 1.0, 0.0)))
    within = bool(r_max.max() <= cfg.newton_tol) if traj.n_states > 1 else True
    return ResidualReport(float(r_max[0]), float(r_max[1]), float(r_max[2]), xi_err,
                          cfg.newton_tol, within, viol, tuple(legit))

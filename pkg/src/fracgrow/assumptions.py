"""Runtime predicates for the structural hypotheses behind each limit study.

Every flag is recomputed from the configuration: spectra of the three
operators, potential metadata and the proliferation kind.  Function-space
embeddings are replaced by a Sobolev-index proxy for Laplacian eigenbases:
``D(A^r)`` behaves like ``H^{2r}``, which embeds in ``L^4`` in dimension ``d``
when ``2r >= d/4``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

__all__ = ["AssumptionCheck", "check_assumptions", "embeds_in_L4", "compatibility_kappa"]


def embeds_in_L4(op):
    return 2.0 * op.exponent >= op.basis.spatial_dim / 4.0


def _constant_ground_state(basis):
    if basis.eigenvalues[0] != 0.0:
        return False
    e1 = basis.synthesis[:, 0]
    return bool(np.allclose(e1, e1[0], rtol=1e-12, atol=0.0))


def _constant_in_domain(op):
    """Whether the constant function belongs to ``D(op)``."""
    if _constant_ground_state(op.basis):
        return True
    # Dirichlet Laplacian: 1 lies in D((-Delta)^s) for s < 1/4
    return op.basis.boundary == "dirichlet" and op.exponent < 0.25


def compatibility_kappa(op_A, op_B):
    """``max_j (1 + lambda_j^{2 rho}) / (1 + lambda_j^{2 sigma})`` on a shared basis, else None."""
    if op_A.basis.key != op_B.basis.key:
        return None
    return float(np.max((1.0 + op_A.multipliers(2.0)) / (1.0 + op_B.multipliers(2.0))))


@dataclass(frozen=True)
class AssumptionCheck:
    """Which structural hypotheses a configuration satisfies.

    ``embed_abc`` is a finite-dimensional proxy (shared basis, ``sigma >= rho``
    and ``L^4`` embeddings), not a verified function-space statement.
    """

    a5_cases: tuple
    a6_ok: bool
    a7_ok: bool
    a8_ok: bool
    embed_ac: bool
    embed_abc: bool
    kappa: float | None
    lambda1_A: float
    lambda1_B: float
    alpha_L: float
    compat_margin: float
    notes: tuple = ()

    @property
    def a5_case(self):
        return self.a5_cases[0] if self.a5_cases else None

    def to_dict(self):
        d = asdict(self)
        d["a5_cases"] = list(self.a5_cases)
        d["notes"] = list(self.notes)
        d["a5_case"] = self.a5_case
        return d


def check_assumptions(cfg):
    """Evaluate (A5)-(A8) and the uniqueness embeddings for ``cfg``."""
    A, B = cfg.op_A.basis, cfg.op_B.basis
    pot, P = cfg.potential, cfg.proliferation
    lam1 = float(A.eigenvalues[0])
    lam1_B = float(B.eigenvalues[0])
    notes = []

    cases = []
    if lam1 > 0:
        cases.append("i")
    if P.lower_bound > 0:
        cases.append("ii")
    simple_zero = lam1 == 0 and (A.n_modes == 1 or A.eigenvalues[1] > 0)
    if simple_zero and _constant_ground_state(A) and _constant_in_domain(cfg.op_B) \
            and pot.satisfies_growth_condition:
        cases.append("iii")
    if lam1 == 0 and not pot.satisfies_growth_condition:
        notes.append(f"{pot.kind} potential has bounded D(F1): growth condition of (A5)(iii) fails")

    alpha_L = cfg.alpha * pot.lipschitz
    compat = float(lam1_B ** (2.0 * cfg.op_B.exponent) + pot.gamma - pot.lipschitz)
    a8 = (pot.is_smooth and pot.has_cubic_growth and pot.gamma > 0 and compat > 0
          and embeds_in_L4(cfg.op_B) and P.is_constant and P.p0 > 0)
    embed_ac = embeds_in_L4(cfg.op_A) and embeds_in_L4(cfg.op_C)
    kappa = compatibility_kappa(cfg.op_A, cfg.op_B)
    embed_abc = (kappa is not None and cfg.op_B.exponent >= cfg.op_A.exponent
                 and embed_ac and embeds_in_L4(cfg.op_B))
    if kappa is not None:
        notes.append("embed_abc is a finite-dimensional proxy")
    return AssumptionCheck(tuple(cases), alpha_L < 1.0, lam1 > 0, bool(a8), bool(embed_ac),
                           bool(embed_abc), kappa, lam1, lam1_B, alpha_L, compat, tuple(notes))

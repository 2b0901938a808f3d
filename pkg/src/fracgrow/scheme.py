"""Implicit Euler Galerkin scheme for the relaxed tumor-growth system.

Unknowns are the eigen-coefficients of the chemical potential ``mu`` (basis of
``A``), the tumor fraction ``phi`` (basis of ``B``) and the nutrient ``S``
(basis of ``C``).  One step from ``(mu, phi, S)`` to ``(mu', phi', S')`` solves

    alpha (mu' - mu)/h + (phi' - phi)/h + A^{2 rho} mu' = P(phi)(S' - mu') + u_mu
    beta (phi' - phi)/h + B^{2 sigma} phi' + f1_lam(phi') + f2(phi) = mu' + u_phi
    (S' - S)/h + C^{2 tau} S' = -P(phi)(S' - mu') + u_S

in the Galerkin sense, with the proliferation ``P`` and the Lipschitz part
``f2`` lagged and the Yosida approximation ``f1_lam`` implicit.  Products
are formed on the shared collocation grid and projected with the quadrature
analysis matrices.  ``alpha = 0`` and ``beta = 0`` are solved as they are.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AssumptionWarning, ConfigError, StepFailure
from .potentials import Potential, Proliferation, YosidaLevel
from .spectral import Field, FractionalOperator, transfer_matrix

__all__ = [
    "Forcing",
    "ProblemConfig",
    "State",
    "Trajectory",
    "Discretization",
    "step",
    "simulate",
    "initial_state",
    "n_steps",
]

FIELDS = ("mu", "phi", "S")


@dataclass(frozen=True, eq=False)
class Forcing:
    """Known source ``u(t) = g(t) * v`` with a fixed spatial profile ``v``.

    ``profile`` selects ``g``: ``constant`` (1), ``linear`` (t) or
    ``sine`` (sin(2 pi frequency t)).
    """

    coefficients: np.ndarray
    profile: str = "constant"
    frequency: float = 1.0

    def __post_init__(self):
        if self.profile not in ("constant", "linear", "sine"):
            raise ConfigError(f"unknown forcing profile {self.profile!r}")
        object.__setattr__(self, "coefficients", np.array(self.coefficients, dtype=float))

    def __call__(self, t):
        if self.profile == "constant":
            g = 1.0
        elif self.profile == "linear":
            g = t
        else:
            g = math.sin(2.0 * math.pi * self.frequency * t)
        return g * self.coefficients


def n_steps(T, h):
    """Number of uniform steps of size ``h`` fitting in ``[0, T]``."""
    return int(math.floor(T / h + 1e-9))


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    """Complete, validated description of one run.

    Initial data and forcings are coefficient vectors in the basis of the
    operator acting on the respective variable (``A`` for ``mu``, ``B`` for
    ``phi``, ``C`` for ``S``).
    """

    op_A: FractionalOperator
    op_B: FractionalOperator
    op_C: FractionalOperator
    alpha: float
    beta: float
    potential: Potential
    lam: float
    proliferation: Proliferation
    mu0: np.ndarray
    phi0: np.ndarray
    S0: np.ndarray
    T: float
    h: float
    forcing_mu: Forcing | None = None
    forcing_phi: Forcing | None = None
    forcing_S: Forcing | None = None
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if not (self.h > 0 and self.T > 0):
            raise ConfigError(f"time grid needs T > 0 and h > 0, got T={self.T}, h={self.h}")
        if n_steps(self.T, self.h) < 1:
            raise ConfigError(f"step h={self.h} exceeds the horizon T={self.T}")
        if not self.newton_tol > 0 or self.newton_max_iter < 1:
            raise ConfigError("newton tolerance must be positive and max_iter at least 1")
        grids = {op.basis.grid_key for op in (self.op_A, self.op_B, self.op_C)}
        if len(grids) != 1:
            raise ConfigError("operators A, B and C must share one spatial grid")
        YosidaLevel.for_potential(self.potential, self.lam)
        for name, op in (("mu0", self.op_A), ("phi0", self.op_B), ("S0", self.op_C)):
            c = np.array(getattr(self, name), dtype=float)
            if c.shape != (op.basis.n_modes,) or not np.all(np.isfinite(c)):
                raise ConfigError(f"initial datum {name} is not a finite vector of length {op.basis.n_modes}")
            object.__setattr__(self, name, c)
        for name, op in (("forcing_mu", self.op_A), ("forcing_phi", self.op_B), ("forcing_S", self.op_C)):
            u = getattr(self, name)
            if u is not None and u.coefficients.shape != (op.basis.n_modes,):
                raise ConfigError(f"{name} has the wrong number of coefficients")
        phi_grid = self.op_B.basis.synthesize(self.phi0)
        if not np.isfinite(self.op_B.basis.integrate(self.potential.F1(phi_grid))):
            raise ConfigError("initial phi0 leaves the effective domain of F1 (F1(phi0) not integrable)")

    @property
    def yosida(self):
        return YosidaLevel.for_potential(self.potential, self.lam)

    @property
    def n_steps(self):
        return n_steps(self.T, self.h)

    def with_params(self, **changes):
        """Copy with some fields replaced (validation reruns)."""
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class State:
    t: float
    mu: Field
    phi: Field
    s_nutrient: Field
    xi: Field


class Discretization:
    """Precomputed matrices for one configuration."""

    def __init__(self, cfg):
        self.cfg = cfg
        A, B, C = cfg.op_A.basis, cfg.op_B.basis, cfg.op_C.basis
        self.bases = (A, B, C)
        self.nA, self.nB, self.nC = A.n_modes, B.n_modes, C.n_modes
        self.sl = (slice(0, self.nA), slice(self.nA, self.nA + self.nB),
                   slice(self.nA + self.nB, self.nA + self.nB + self.nC))
        self.size = self.nA + self.nB + self.nC
        self.lamA = cfg.op_A.multipliers(2.0)
        self.lamB = cfg.op_B.multipliers(2.0)
        self.lamC = cfg.op_C.multipliers(2.0)
        self.T_AB = transfer_matrix(A, B)
        self.T_BA = transfer_matrix(B, A)
        self.weights = A.weights

    def split(self, x):
        return x[self.sl[0]], x[self.sl[1]], x[self.sl[2]]

    def stack(self, mu, phi, S):
        return np.concatenate([mu, phi, S])

    def coupling(self, phi_prev):
        """Matrices ``K_XY = Q_X diag(P(phi)) S_Y`` for the exchange term."""
        A, _, C = self.bases
        p = self.cfg.proliferation(self.bases[1].synthesize(phi_prev))
        QA = A.analysis * p
        QC = C.analysis * p
        return QA @ A.synthesis, QA @ C.synthesis, QC @ A.synthesis, QC @ C.synthesis

    def xi(self, phi):
        B = self.bases[1]
        return B.analyze(self.cfg.potential.yosida_f1(self.cfg.lam, B.synthesize(phi)))

    def forcing(self, t):
        cfg = self.cfg
        return tuple(np.zeros(n) if u is None else u(t)
                     for u, n in ((cfg.forcing_mu, self.nA), (cfg.forcing_phi, self.nB),
                                  (cfg.forcing_S, self.nC)))

    def residual(self, x, prev, t_new, K=None):
        """Stacked residual of the three step equations at the candidate ``x``."""
        cfg, h = self.cfg, self.cfg.h
        mu, phi, S = self.split(x)
        mu0, phi0, S0 = self.split(prev)
        K_AA, K_AC, K_CA, K_CC = self.coupling(phi0) if K is None else K
        u_mu, u_phi, u_S = self.forcing(t_new)
        B = self.bases[1]
        pot = cfg.potential
        r1 = (cfg.alpha * (mu - mu0) + self.T_AB @ (phi - phi0)) / h + self.lamA * mu \
            - (K_AC @ S - K_AA @ mu) - u_mu
        r2 = cfg.beta * (phi - phi0) / h + self.lamB * phi \
            + B.analyze(pot.yosida_f1(cfg.lam, B.synthesize(phi)) + pot.f2(B.synthesize(phi0))) \
            - self.T_BA @ mu - u_phi
        r3 = (S - S0) / h + self.lamC * S + (K_CC @ S - K_CA @ mu) - u_S
        return np.concatenate([r1, r2, r3])

    def jacobian(self, x, K):
        cfg, h = self.cfg, self.cfg.h
        _, phi, _ = self.split(x)
        B = self.bases[1]
        K_AA, K_AC, K_CA, K_CC = K
        d = cfg.potential.yosida_df1(cfg.lam, B.synthesize(phi))
        J = np.zeros((self.size, self.size))
        a, b, c = self.sl
        J[a, a] = np.diag(cfg.alpha / h + self.lamA) + K_AA
        J[a, b] = self.T_AB / h
        J[a, c] = -K_AC
        J[b, a] = -self.T_BA
        J[b, b] = np.diag(cfg.beta / h + self.lamB) + (B.analysis * d) @ B.synthesis
        J[c, a] = -K_CA
        J[c, c] = np.diag(1.0 / h + self.lamC) + K_CC
        return J

    def newton(self, x0, prev, t_new):
        """Damped Newton solve of one step; returns ``(x, residual, iterations)``."""
        cfg = self.cfg
        K = self.coupling(self.split(prev)[1])
        x = x0.copy()
        r = self.residual(x, prev, t_new, K)
        res = np.max(np.abs(r))
        for it in range(1, cfg.newton_max_iter + 1):
            if res <= cfg.newton_tol:
                return x, res, it - 1
            dx = np.linalg.solve(self.jacobian(x, K), -r)
            t = 1.0
            while True:
                x_try = x + t * dx
                r_try = self.residual(x_try, prev, t_new, K)
                res_try = np.max(np.abs(r_try))
                if res_try <= (1.0 - 1e-4 * t) * res or t < 1.0 / 64:
                    break
                t *= 0.5
            x, r, res_prev, res = x_try, r_try, res, res_try
            # stagnation at roundoff level of the stacked system
            if np.max(np.abs(t * dx)) <= 16 * np.finfo(float).eps * (1.0 + np.max(np.abs(x))) \
                    and res >= 0.5 * res_prev:
                return x, res, it
        if res <= cfg.newton_tol:
            return x, res, cfg.newton_max_iter
        raise StepFailure(f"Newton did not converge in {cfg.newton_max_iter} iterations "
                          f"(residual {res:.3e} > tol {cfg.newton_tol:.1e})", residual=res)


def _constrained_start(disc):
    """Consistent ``(mu, phi)`` for ``alpha > 0, beta = 0`` keeping ``alpha mu + phi`` fixed."""
    cfg = disc.cfg
    B = disc.bases[1]
    pot, lam = cfg.potential, cfg.lam
    w0 = cfg.alpha * cfg.mu0 + disc.T_AB @ cfg.phi0
    u_phi = disc.forcing(0.0)[1]
    n = disc.nA

    def res(z):
        mu, phi = z[:n], z[n:]
        g = B.synthesize(phi)
        r1 = cfg.alpha * mu + disc.T_AB @ phi - w0
        r2 = disc.lamB * phi + B.analyze(pot.yosida_f(lam, g)) - disc.T_BA @ mu - u_phi
        return np.concatenate([r1, r2])

    z = np.concatenate([cfg.mu0, cfg.phi0])
    r = res(z)
    for _ in range(cfg.newton_max_iter):
        if np.max(np.abs(r)) <= cfg.newton_tol:
            break
        g = B.synthesize(z[n:])
        d = pot.yosida_df1(lam, g) - pot.lipschitz
        J = np.block([[cfg.alpha * np.eye(n), disc.T_AB],
                      [-disc.T_BA, np.diag(disc.lamB) + (B.analysis * d) @ B.synthesis]])
        dz = np.linalg.solve(J, -r)
        z = z + dz
        r = res(z)
        if np.max(np.abs(dz)) <= 16 * np.finfo(float).eps * (1.0 + np.max(np.abs(z))):
            break
    else:
        raise StepFailure("initial constraint projection did not converge",
                          residual=float(np.max(np.abs(r))))
    return z[:n], z[n:]


def initial_state(cfg, disc=None):
    """State at ``t = 0`` matching the sign pattern of ``(alpha, beta)``.

    ``alpha > 0, beta > 0``: ``(mu0, phi0, S0)``.
    ``alpha > 0, beta = 0``: only ``alpha mu + phi`` and ``S`` are prescribed;
    ``(mu, phi)`` is the consistent pair satisfying the algebraic phi-equation.
    ``alpha = 0``: ``phi0`` and ``S0`` are prescribed; ``mu`` carries no initial
    condition and ``mu0`` is stored as a nominal value only.
    """
    disc = disc or Discretization(cfg)
    mu, phi = cfg.mu0, cfg.phi0
    if cfg.alpha > 0 and cfg.beta == 0:
        mu, phi = _constrained_start(disc)
    return disc.stack(mu, phi, cfg.S0)


def _as_state(disc, t, x):
    mu, phi, S = disc.split(x)
    A, B, C = disc.bases
    return State(t, Field(A, mu), Field(B, phi), Field(C, S), Field(B, disc.xi(phi)))


def _warn_degenerate(cfg):
    if cfg.alpha == 0 and cfg.beta == 0 and cfg.op_A.basis.eigenvalues[0] == 0:
        warnings.warn("alpha = beta = 0 with lambda_1(A) = 0: (A7) does not hold",
                      AssumptionWarning, stacklevel=3)


def step(prev, cfg, guess=None, disc=None):
    """Advance ``prev`` by one implicit Euler step of size ``cfg.h``.

    Parameters
    ----------
    prev : State
    cfg : ProblemConfig
    guess : ndarray, optional
        Stacked initial Newton iterate; defaults to the previous state.

    Returns
    -------
    State
    """
    disc = disc or Discretization(cfg)
    _warn_degenerate(cfg)
    x_prev = disc.stack(prev.mu.coefficients, prev.phi.coefficients, prev.s_nutrient.coefficients)
    if not np.all(np.isfinite(x_prev)):
        raise StepFailure("previous state is not finite")
    t_new = prev.t + cfg.h
    x, _, _ = disc.newton(x_prev if guess is None else np.asarray(guess, float), x_prev, t_new)
    if not np.all(np.isfinite(x)):
        raise StepFailure("step produced non-finite values")
    return _as_state(disc, t_new, x)


@dataclass(eq=False)
class Trajectory:
    """Uniformly sampled solution ``t_n = n h``, ``n = 0..n_steps``.

    Coefficient histories are stored as arrays of shape ``(n_states, n_modes)``.
    """

    cfg: ProblemConfig
    times: np.ndarray
    mu: np.ndarray
    phi: np.ndarray
    S: np.ndarray
    xi: np.ndarray
    residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def n_states(self):
        return self.times.shape[0]

    def state(self, n):
        A, B, C = self.cfg.op_A.basis, self.cfg.op_B.basis, self.cfg.op_C.basis
        return State(float(self.times[n]), Field(A, self.mu[n]), Field(B, self.phi[n]),
                     Field(C, self.S[n]), Field(B, self.xi[n]))

    @property
    def states(self):
        return [self.state(n) for n in range(self.n_states)]

    def field(self, name):
        return {"mu": self.mu, "phi": self.phi, "S": self.S, "xi": self.xi}[name]

    def stacked(self, n):
        return np.concatenate([self.mu[n], self.phi[n], self.S[n]])


def simulate(cfg, guess_seed=None, guess_scale=0.1):
    """Run the scheme over ``[0, T]``.

    Parameters
    ----------
    cfg : ProblemConfig
    guess_seed : int, optional
        When given, every Newton solve starts from the previous state plus a
        Gaussian perturbation of relative size ``guess_scale`` drawn from this
        seed (used to probe uniqueness of the discrete solution).

    Raises
    ------
    StepFailure
        With ``partial`` set to the trajectory computed so far.
    """
    disc = Discretization(cfg)
    _warn_degenerate(cfg)
    n = cfg.n_steps
    x = initial_state(cfg, disc)
    rng = None if guess_seed is None else np.random.default_rng(guess_seed)
    xs = [x]
    residuals, iterations = [], []
    for k in range(1, n + 1):
        t_new = k * cfg.h
        x0 = x
        if rng is not None:
            x0 = x + guess_scale * (1.0 + np.abs(x)) * rng.standard_normal(x.shape)
        try:
            x, res, its = disc.newton(x0, x, t_new)
            if not np.all(np.isfinite(x)):
                raise StepFailure("step produced non-finite values", residual=res)
        except StepFailure as exc:
            exc.step_index = k
            exc.partial = _assemble(cfg, disc, xs, residuals, iterations)
            raise
        xs.append(x)
        residuals.append(res)
        iterations.append(its)
    return _assemble(cfg, disc, xs, residuals, iterations)


def _assemble(cfg, disc, xs, residuals, iterations):
    X = np.array(xs)
    mu, phi, S = X[:, disc.sl[0]], X[:, disc.sl[1]], X[:, disc.sl[2]]
    B = disc.bases[1]
    xi = B.analyze(cfg.potential.yosida_f1(cfg.lam, B.synthesize(phi)))
    times = np.arange(X.shape[0]) * cfg.h
    return Trajectory(cfg, times, mu, phi, S, xi, np.array(residuals), np.array(iterations, dtype=int))

"""Double-well potentials, their convex/Lipschitz splitting and Moreau-Yosida apparatus.

Every potential is written as ``F = F1 + F2`` with ``F1`` convex, lower
semicontinuous, nonnegative and vanishing at 0, and ``F2`` smooth with
``L``-Lipschitz derivative.  The subdifferential ``f1 = dF1`` is handled
through its resolvent ``J = (id + lam f1)^{-1}`` (the proximal map of
``lam F1``) and the Yosida approximation ``f1_lam = (s - J(s)) / lam``.

All evaluations are vectorized over numpy arrays and return plain floats for
scalar input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy.special import xlogy

from .errors import ConfigError, NumericalError

__all__ = [
    "POTENTIAL_KINDS",
    "Potential",
    "YosidaLevel",
    "Proliferation",
    "PotentialValues",
    "evaluate",
    "resolvent_J",
    "yosida_f1",
    "yosida_F1",
    "yosida_F1_quadrature",
    "proliferation_eval",
    "fit_quadratic_lower_bound",
    "fit_yosida_lower_bound",
    "fit_growth_bound",
    "cubic_growth_constant",
]

POTENTIAL_KINDS = ("regular", "logarithmic", "double_obstacle", "quadratic_test")
LOG_EDGE = 1.0 - 1e-15


def _out(x, scalar):
    return float(x) if scalar else x


def _newton_bisect(g, dg, s, lo, hi, tol=1e-14, max_iter=100):
    """Vectorized safeguarded Newton for increasing scalar maps ``g(y) = s``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    y = 0.5 * (lo + hi)
    done = np.zeros(y.shape, dtype=bool)
    for _ in range(max_iter):
        r = g(y) - s
        done |= r == 0.0
        hi = np.where(r > 0, y, hi)
        lo = np.where(r < 0, y, lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            trial = y - r / dg(y)
        inside = np.isfinite(trial) & (trial > lo) & (trial < hi)
        y_new = np.where(done, y, np.where(inside, trial, 0.5 * (lo + hi)))
        scale = np.maximum(1.0, np.abs(y_new))
        done |= (np.abs(y_new - y) <= tol * scale) | (hi - lo <= tol * scale)
        y = y_new
        if done.all():
            return y
    bad = ~done
    raise NumericalError(
        f"resolvent root finder did not converge for {bad.sum()} point(s); "
        f"first bracket [{lo[bad].flat[0]!r}, {hi[bad].flat[0]!r}] at s={np.broadcast_to(s, y.shape)[bad].flat[0]!r}")


class PotentialValues(NamedTuple):
    F1: float
    F2: float
    f1_min: float | None
    f2: float


@dataclass(frozen=True)
class Potential:
    """Split double-well potential.

    Parameters
    ----------
    kind : str
        One of ``regular``, ``logarithmic``, ``double_obstacle``,
        ``quadratic_test``.
    c1 : float
        Concavity coefficient of the logarithmic potential, must exceed 1.
    c2 : float
        Height of the double obstacle potential, must be positive.

    Notes
    -----
    Splittings used::

        regular          F1 = s^4/4 + s^2/2           F2 = -s^2 + 1/4     L = 2
        logarithmic      F1 = (1+s)ln(1+s)+(1-s)ln(1-s)  F2 = -c1 s^2    L = 2 c1
        double_obstacle  F1 = indicator of [-1, 1]    F2 = c2 (1 - s^2)   L = 2 c2
        quadratic_test   F1 = s^2/2                   F2 = 0              L = 0
    """

    kind: str = "regular"
    c1: float = 2.0
    c2: float = 1.0

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise ConfigError(f"unknown potential kind {self.kind!r}; expected one of {POTENTIAL_KINDS}")
        if self.kind == "logarithmic" and not self.c1 > 1:
            raise ConfigError(f"logarithmic potential requires c1 > 1, got c1={self.c1}")
        if self.kind == "double_obstacle" and not self.c2 > 0:
            raise ConfigError(f"double obstacle potential requires c2 > 0, got c2={self.c2}")

    # structural metadata

    @property
    def lipschitz(self):
        """Lipschitz constant ``L`` of ``f2``."""
        return {"regular": 2.0, "logarithmic": 2.0 * self.c1,
                "double_obstacle": 2.0 * self.c2, "quadratic_test": 0.0}[self.kind]

    @property
    def gamma(self):
        """Strong monotonicity constant of ``f1`` (0 when ``f1`` is not strongly monotone)."""
        return {"regular": 1.0, "logarithmic": 2.0,
                "double_obstacle": 0.0, "quadratic_test": 1.0}[self.kind]

    @property
    def domain(self):
        """Closed effective domain of ``F1``."""
        if self.kind in ("logarithmic", "double_obstacle"):
            return (-1.0, 1.0)
        return (-math.inf, math.inf)

    @property
    def is_smooth(self):
        """``F1`` is C^1 on the whole real line."""
        return self.kind in ("regular", "quadratic_test")

    @property
    def has_cubic_growth(self):
        return self.kind in ("regular", "quadratic_test")

    @property
    def satisfies_growth_condition(self):
        """``D(F1) = R`` and ``|f1| <= c3 F1 + c4``: true for the polynomial splittings."""
        return self.kind in ("regular", "quadratic_test")

    @property
    def yosida_cap(self):
        """``Lambda``: below it ``F1_lam + F2`` stays coercive (``lam L < 1``)."""
        return math.inf if self.lipschitz == 0 else 1.0 / self.lipschitz

    # pointwise values

    def F1(self, s):
        scalar = np.ndim(s) == 0
        s = np.asarray(s, dtype=float)
        if self.kind == "regular":
            v = 0.25 * s ** 4 + 0.5 * s ** 2
        elif self.kind == "quadratic_test":
            v = 0.5 * s ** 2
        elif self.kind == "double_obstacle":
            v = np.where(np.abs(s) <= 1.0, 0.0, np.inf)
        else:
            inside = np.abs(s) <= 1.0
            sc = np.clip(s, -1.0, 1.0)
            v = np.where(inside, xlogy(1.0 + sc, 1.0 + sc) + xlogy(1.0 - sc, 1.0 - sc), np.inf)
        return _out(v, scalar)

    def F2(self, s):
        scalar = np.ndim(s) == 0
        s = np.asarray(s, dtype=float)
        if self.kind == "regular":
            v = 0.25 - s ** 2
        elif self.kind == "logarithmic":
            v = -self.c1 * s ** 2
        elif self.kind == "double_obstacle":
            v = self.c2 * (1.0 - s ** 2)
        else:
            v = np.zeros_like(s)
        return _out(v, scalar)

    def F(self, s):
        return self.F1(s) + self.F2(s)

    def f2(self, s):
        scalar = np.ndim(s) == 0
        s = np.asarray(s, dtype=float)
        if self.kind == "quadratic_test":
            v = np.zeros_like(s)
        else:
            v = -self.lipschitz * s
        return _out(v, scalar)

    def f1(self, s):
        """Minimal section of ``dF1``; NaN outside ``D(f1)``."""
        scalar = np.ndim(s) == 0
        s = np.asarray(s, dtype=float)
        if self.kind == "regular":
            v = s ** 3 + s
        elif self.kind == "quadratic_test":
            v = s.copy()
        elif self.kind == "double_obstacle":
            v = np.where(np.abs(s) <= 1.0, 0.0, np.nan)
        else:
            inside = np.abs(s) < 1.0
            sc = np.where(inside, s, 0.0)
            v = np.where(inside, np.log1p(sc) - np.log1p(-sc), np.nan)
        return _out(v, scalar)

    # Moreau-Yosida

    def resolvent(self, lam, s):
        """``J(s)``: the unique ``y`` with ``y + lam f1(y)`` containing ``s``."""
        scalar = np.ndim(s) == 0
        s = np.asarray(s, dtype=float)
        if self.kind == "double_obstacle":
            y = np.clip(s, -1.0, 1.0)
        elif self.kind == "quadratic_test":
            y = s / (1.0 + lam)
        elif self.kind == "regular":
            # root lies between 0 and s / (1 + lam)
            b = s / (1.0 + lam)
            y = _newton_bisect(lambda y: y + lam * (y ** 3 + y),
                               lambda y: 1.0 + lam * (3.0 * y ** 2 + 1.0),
                               s, np.minimum(0.0, b), np.maximum(0.0, b))
        else:
            y = self._log_resolvent(lam, s)
        return _out(y, scalar)

    def _log_resolvent(self, lam, s):
        def g(y):
            return y + lam * (np.log1p(y) - np.log1p(-y))

        def dg(y):
            return 1.0 + 2.0 * lam / ((1.0 - y) * (1.0 + y))

        lo = np.clip(np.minimum(0.0, s), -LOG_EDGE, LOG_EDGE)
        hi = np.clip(np.maximum(0.0, s), -LOG_EDGE, LOG_EDGE)
        # beyond the representable edge the root is saturated
        top = g(hi) <= s
        bottom = g(lo) >= s
        y = np.where(top, hi, np.where(bottom, lo, 0.0))
        free = ~(top | bottom)
        if free.any():
            y = y.copy()
            y[free] = _newton_bisect(g, dg, s[free], lo[free], hi[free])
            near = free & (np.abs(y) > 0.5)
            if near.any():
                y[near] = self._log_polish(lam, s[near], y[near])
        return y

    @staticmethod
    def _log_polish(lam, s, y, steps=4):
        # Newton in u = log(1 - |y|): near the edge g is steep in y but tame in u
        a, sign = np.abs(s), np.sign(s)
        u = np.log1p(-np.abs(y))
        u_min = math.log(1.0 - LOG_EDGE)
        for _ in range(steps):
            d = np.exp(u)
            h = 1.0 - d + lam * (np.log(2.0 - d) - u) - a
            dh = -d * (1.0 + lam / (2.0 - d)) - lam
            u = np.clip(u - h / dh, u_min, 0.0)
        return sign * (1.0 - np.exp(u))

    def yosida_f1(self, lam, s):
        """``f1_lam(s) = (s - J(s)) / lam``."""
        scalar = np.ndim(s) == 0
        s = np.asarray(s, dtype=float)
        return _out((s - self.resolvent(lam, s)) / lam, scalar)

    def yosida_df1(self, lam, s):
        """Derivative of ``f1_lam`` (a generalized derivative for the obstacle)."""
        scalar = np.ndim(s) == 0
        s = np.asarray(s, dtype=float)
        if self.kind == "double_obstacle":
            v = np.where(np.abs(s) > 1.0, 1.0 / lam, 0.0)
        elif self.kind == "quadratic_test":
            v = np.full_like(s, 1.0 / (1.0 + lam))
        else:
            y = self.resolvent(lam, s)
            if self.kind == "regular":
                inv = 1.0 / (3.0 * y ** 2 + 1.0)
            else:
                inv = 0.5 * (1.0 - y) * (1.0 + y)
            v = 1.0 / (inv + lam)
        return _out(v, scalar)

    def yosida_F1(self, lam, s):
        """``F1_lam(s) = F1(J(s)) + (s - J(s))^2 / (2 lam)``, the Moreau envelope."""
        scalar = np.ndim(s) == 0
        s = np.asarray(s, dtype=float)
        if self.kind == "double_obstacle":
            d = s - np.clip(s, -1.0, 1.0)
            v = d * d / (2.0 * lam)
        elif self.kind == "quadratic_test":
            v = s * s / (2.0 * (1.0 + lam))
        else:
            y = self.resolvent(lam, s)
            v = self.F1(y) + (s - y) ** 2 / (2.0 * lam)
        return _out(v, scalar)

    def yosida_F(self, lam, s):
        return self.yosida_F1(lam, s) + self.F2(s)

    def yosida_f(self, lam, s):
        return self.yosida_f1(lam, s) + self.f2(s)


@dataclass(frozen=True)
class YosidaLevel:
    """Regularization level ``lam`` with its admissibility cap ``Lambda``."""

    lam: float
    cap: float = math.inf

    def __post_init__(self):
        if not (self.lam > 0 and self.lam < self.cap):
            raise ConfigError(
                f"Yosida level must satisfy 0 < lambda < Lambda={self.cap}, got {self.lam}")

    @classmethod
    def for_potential(cls, potential, lam):
        return cls(float(lam), potential.yosida_cap)


@dataclass(frozen=True)
class Proliferation:
    """Bounded Lipschitz proliferation ``P >= 0``.

    ``constant``: ``P = p0``.  ``smooth_bump``: ``P(s) = p0 exp(-(s/width)^2)``.
    """

    kind: str = "constant"
    p0: float = 0.5
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "smooth_bump"):
            raise ConfigError(f"unknown proliferation kind {self.kind!r}")
        if not self.p0 >= 0:
            raise ConfigError(f"proliferation level p0 must be nonnegative, got {self.p0}")
        if self.kind == "smooth_bump" and not self.width > 0:
            raise ConfigError(f"proliferation width must be positive, got {self.width}")

    def __call__(self, s):
        scalar = np.ndim(s) == 0
        s = np.asarray(s, dtype=float)
        if self.kind == "constant":
            v = np.full_like(s, self.p0)
        else:
            v = self.p0 * np.exp(-(s / self.width) ** 2)
        return _out(v, scalar)

    @property
    def is_constant(self):
        return self.kind == "constant"

    @property
    def is_zero(self):
        return self.p0 == 0.0

    @property
    def bound(self):
        return self.p0

    @property
    def lower_bound(self):
        """Largest ``P0`` with ``P >= P0`` on the whole real line."""
        return self.p0 if self.kind == "constant" else 0.0

    @property
    def lipschitz(self):
        if self.kind == "constant":
            return 0.0
        return self.p0 * math.sqrt(2.0) * math.exp(-0.5) / self.width


# functional interface


def evaluate(potential, s):
    """``(F1, F2, f1 minimal section or None, f2)`` at a scalar ``s``."""
    f1 = potential.f1(float(s))
    return PotentialValues(potential.F1(float(s)), potential.F2(float(s)),
                           None if math.isnan(f1) else f1, potential.f2(float(s)))


def resolvent_J(potential, level, s):
    return potential.resolvent(level.lam, s)


def yosida_f1(potential, level, s):
    return potential.yosida_f1(level.lam, s)


def yosida_F1(potential, level, s):
    return potential.yosida_F1(level.lam, s)


def yosida_F1_quadrature(potential, level, s, tol=1e-10):
    """``int_0^s f1_lam`` by adaptive quadrature."""
    f = lambda t: potential.yosida_f1(level.lam, t)  # noqa: E731
    pts = [p for p in (-1.0, 1.0) if min(0.0, s) < p < max(0.0, s)] or None
    val, err = integrate.quad(f, 0.0, float(s), epsabs=tol, epsrel=tol, limit=200, points=pts)
    if not np.isfinite(val) or err > 100 * tol * max(1.0, abs(val)):
        raise NumericalError(f"quadrature of f1_lam from 0 to {s} failed (estimate {err:.3g})")
    return val


def proliferation_eval(p, s):
    return p(s)


# fitted structural constants


def fit_quadratic_lower_bound(F, samples):
    """Fit ``(c1, c2)`` with ``F(s) >= c1 s^2 - c2`` on the samples, ``c1 > 0``.

    ``c1`` is half the smallest ratio ``F(s)/s^2`` over the outer half of the
    sample range (1 if ``F`` is infinite there); ``c2`` is then the smallest
    offset making the bound hold.
    """
    s = np.asarray(samples, dtype=float)
    v = np.asarray(F(s), dtype=float)
    tail = np.abs(s) >= 0.5 * np.abs(s).max()
    finite_tail = tail & np.isfinite(v)
    c1 = 1.0
    if finite_tail.any():
        ratio = (v[finite_tail] / s[finite_tail] ** 2).min()
        if ratio > 0:
            c1 = 0.5 * ratio
    fin = np.isfinite(v)
    c2 = max(float(np.max(c1 * s[fin] ** 2 - v[fin])), 0.0) + 1e-12
    return c1, c2


def fit_yosida_lower_bound(potential, lams, samples):
    """Common ``(c1_hat, c2_hat)`` with ``F_lam(s) >= c1_hat s^2 - c2_hat`` for all given ``lam``."""
    lams = [lam for lam in lams if lam < potential.yosida_cap]
    fits = [fit_quadratic_lower_bound(lambda s, lam=lam: potential.yosida_F(lam, s), samples)
            for lam in lams]
    c1 = min(f[0] for f in fits)
    s = np.asarray(samples, dtype=float)
    c2 = max(float(np.max(c1 * s ** 2 - potential.yosida_F(lam, s))) for lam in lams)
    return c1, max(c2, 0.0) + 1e-12


def fit_growth_bound(potential, lams, samples, c3=4.0):
    """``c4`` making ``|f1_lam| <= c3 F1_lam + c4`` on the samples, or None.

    Returns None for potentials whose ``F1`` has a bounded domain, which
    cannot satisfy the growth condition.
    """
    if not potential.satisfies_growth_condition:
        return None
    s = np.asarray(samples, dtype=float)
    c4 = 0.0
    for lam in lams:
        gap = np.abs(potential.yosida_f1(lam, s)) - c3 * potential.yosida_F1(lam, s)
        c4 = max(c4, float(gap.max()))
    return c3, c4


def cubic_growth_constant(potential, samples):
    """``max |f1(s)| / (|s|^3 + 1)`` on the samples, or None if ``F1`` is not C^1."""
    if not potential.is_smooth:
        return None
    s = np.asarray(samples, dtype=float)
    return float(np.max(np.abs(potential.f1(s)) / (np.abs(s) ** 3 + 1.0)))

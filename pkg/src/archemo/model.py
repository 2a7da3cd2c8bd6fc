"""Model coefficients, kinetics, and the analytic predicates used as run-time checks.

Holds the full coefficient set of the three-field system

    u_t = d1 Lap(u) - chi div(u^k grad v) + xi div(u^k grad w)
          + mu u^m (1 - integral(u)),
    v_t = d2 Lap(v) - alpha v + K u^l,
    w_t = d3 Lap(w) - beta w + K u^l,

together with the executable form of the known analytic facts: the
boundedness-regime predicate on (k, l, m) and the total-mass bounds with
their exponential decay envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, integrate

__all__ = [
    "ModelParams",
    "MassEnvelope",
    "Theorem1Result",
    "EnvelopeReport",
    "EmptySeriesError",
    "production",
    "nonlocal_source",
    "theorem1_predicate",
    "mass_envelope_check",
]


class EmptySeriesError(ValueError):
    """A mass series with no samples was handed to the envelope check."""


@dataclass(frozen=True)
class ModelParams:
    """All PDE coefficients and exponents.

    Every coefficient is strictly positive except mu, which may be zero to
    disable the nonlocal logistic source.  k_exp and m_exp must be >= 1.
    """

    d1: float = 1.0
    d2: float = 1.0
    d3: float = 1.0
    chi: float = 1.0
    xi: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    mu: float = 0.0
    K_coef: float = 1.0
    l_exp: float = 1.0
    k_exp: float = 1.0
    m_exp: float = 1.0

    def __post_init__(self):
        for name in ("d1", "d2", "d3", "chi", "xi", "alpha", "beta", "K_coef", "l_exp"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.mu < 0.0:
            raise ValueError("mu must be nonnegative")
        if self.k_exp < 1.0:
            raise ValueError("k_exp must be >= 1")
        if self.m_exp < 1.0:
            raise ValueError("m_exp must be >= 1")

    @property
    def has_fractional_powers(self) -> bool:
        """True if advancing the state evaluates a fractional power of u."""
        return (
            not float(self.k_exp).is_integer()
            or not float(self.l_exp).is_integer()
            or (self.mu > 0.0 and not float(self.m_exp).is_integer())
        )


def _pow(u, e: float):
    # fast paths keep the common integer exponents off the libm pow route
    if e == 1.0:
        return u
    if e == 2.0:
        return u * u
    return u**e


def production(u_val, params: ModelParams):
    """Chemical production K * u^l; elementwise on arrays.

    Nonnegative input gives nonnegative output.  Negative input with a
    fractional l is the caller's responsibility (the stepper routes such
    states through its imaginary-state detector first).
    """
    if params.K_coef == 1.0:
        return _pow(u_val, params.l_exp)
    return params.K_coef * _pow(u_val, params.l_exp)


def nonlocal_source(grid: Grid, u: np.ndarray, params: ModelParams) -> np.ndarray:
    """Logistic source mu * u^m * (1 - integral(u)); the integral is computed once."""
    if params.mu == 0.0:
        return np.zeros_like(u)
    M = integrate(grid, u)
    return (params.mu * (1.0 - M)) * _pow(u, params.m_exp)


@dataclass(frozen=True)
class Theorem1Result:
    """Outcome of the boundedness-regime predicate with per-clause detail."""

    satisfied: bool
    clauses: tuple[tuple[str, bool], ...]
    lines: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.satisfied

    @property
    def explanation(self) -> str:
        return "\n".join(self.lines)


def theorem1_predicate(n: int, params: ModelParams) -> Theorem1Result:
    """Check the provable global-boundedness regime for spatial dimension n.

    True iff k >= 1, l + k < 1 + 2/n and 1 < m < 1 + 2/n.  For n = 1 the
    system is known to be globally solvable regardless, which is reported in
    the explanation without changing the clause arithmetic.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    k, l, m = params.k_exp, params.l_exp, params.m_exp
    bound = 1.0 + 2.0 / n
    clauses = (
        ("k >= 1", k >= 1.0),
        ("l + k < 1 + 2/n", l + k < bound),
        ("1 < m < 1 + 2/n", 1.0 < m < bound),
    )
    satisfied = all(ok for _, ok in clauses)
    lines = [
        f"k >= 1: {'satisfied' if clauses[0][1] else 'violated'} (k = {k:g})",
        f"l + k < 1 + 2/n: {'satisfied' if clauses[1][1] else 'violated'} "
        f"(l + k = {l + k:g}, 1 + 2/n = {bound:g})",
        f"1 < m < 1 + 2/n: {'satisfied' if clauses[2][1] else 'violated'} (m = {m:g})",
    ]
    if params.mu == 0.0:
        lines.append(
            "note: mu = 0 disables the logistic source; the boundedness "
            "statement assumes a positive rate"
        )
    if n == 1:
        lines.append(
            "note: for n = 1 solutions extend globally without further "
            "parameter restrictions"
        )
    return Theorem1Result(satisfied, clauses, tuple(lines))


@dataclass(frozen=True)
class MassEnvelope:
    """Bounds on the total mass M(t) and its deviation from 1."""

    M0: float
    m_exp: float

    @property
    def lower(self) -> float:
        return min(1.0, self.M0)

    @property
    def upper(self) -> float:
        return max(1.0, self.M0)

    @property
    def rate(self) -> float:
        return min(1.0, self.M0**self.m_exp)

    def deviation_bound(self, t: float) -> float:
        """Envelope |1 - M(t)| <= |1 - M0| exp(-min(1, M0^m) t)."""
        return abs(1.0 - self.M0) * math.exp(-self.rate * t)


@dataclass(frozen=True)
class EnvelopeReport:
    """Result of checking a recorded mass series against MassEnvelope."""

    passed: bool
    worst_violation: float
    flagged: tuple[int, ...]
    n_samples: int
    tol: float

    def summary(self) -> str:
        if self.passed:
            return f"pass ({self.n_samples} samples, tol={self.tol:.3e})"
        return (
            f"FAIL: {len(self.flagged)}/{self.n_samples} samples violate the "
            f"mass bounds (worst excess {self.worst_violation:.3e}, tol={self.tol:.3e})"
        )


def mass_envelope_check(mass_series, M0: float, m_exp: float, tol: float) -> EnvelopeReport:
    """Flag samples outside the mass bounds or the decay envelope.

    mass_series is a time-sorted sequence of (t, M) pairs with M0 the initial
    mass.  The interval bounds get an additive tolerance, the decay envelope a
    multiplicative (1 + tol); both absorb the first-order time-integration
    error of a discrete trajectory.
    """
    series = list(mass_series)
    if not series:
        raise EmptySeriesError("mass series has no samples")
    env = MassEnvelope(M0=M0, m_exp=m_exp)
    flagged = []
    worst = 0.0
    for idx, (t, M) in enumerate(series):
        excess = 0.0
        if M < env.lower - tol:
            excess = max(excess, (env.lower - tol) - M)
        if M > env.upper + tol:
            excess = max(excess, M - (env.upper + tol))
        bound = env.deviation_bound(t) * (1.0 + tol)
        if abs(1.0 - M) > bound:
            excess = max(excess, abs(1.0 - M) - bound)
        if excess > 0.0:
            flagged.append(idx)
            worst = max(worst, excess)
    return EnvelopeReport(
        passed=not flagged,
        worst_violation=worst,
        flagged=tuple(flagged),
        n_samples=len(series),
        tol=tol,
    )

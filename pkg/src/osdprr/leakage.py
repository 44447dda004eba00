"""Closed-form posterior-odds calculus for suppress-or-release evidence.

Every result is a `PosteriorRatio`, the odds ``P(X=0 | evidence) / P(X=1 |
evidence)`` held in log space so that repeated-query composition
(``n * epsilon`` in the exponent) never overflows.  The ratio 0, certainty
that a record is non-sensitive, is a legitimate value (log ``-inf``): it
arises whenever the record itself is seen released.

Evidence about a record's own mechanism output multiplies the prior odds by
``exp(n * epsilon)`` after ``n`` suppressions.  Evidence about a *dependent*
record multiplies the target's prior odds by one of two factors derived from
the dependency conditionals (delta1, delta2):

* suppression observed: ``(delta1 * (e^eps - 1) + 1) / (delta2 * (e^eps - 1) + 1)``
* release observed:     ``(1 - delta1) / (1 - delta2)``

Colluding observers compose multiplicatively: a suppression of the target's
own record contributes a further ``exp(epsilon_target)``, and a release of it
drives the ratio to exactly 0 (a released record cannot be sensitive; this
branch follows from the chain-rule decomposition of the joint evidence, and
is a derived extension of the suppression-only composition rule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    DegenerateDependencyError,
    DegeneratePriorError,
    InvalidParameterError,
)
from .model import (
    DependencyPair,
    ReleaseOutcome,
    _check_epsilon,
    _check_probability,
    check_query_count,
)


@dataclass(frozen=True)
class PosteriorRatio:
    """Posterior odds of sensitivity, stored as a natural log.

    ``log_value = -inf`` encodes ratio 0 (certainly non-sensitive).
    ``log_value = +inf`` (certainly sensitive) never arises from the closed
    forms here, which raise on degenerate inputs instead, but is permitted so
    the exact enumeration oracle can represent degenerate scenarios.
    """

    log_value: float

    def __post_init__(self):
        if not isinstance(self.log_value, (int, float)) or isinstance(self.log_value, bool):
            raise InvalidParameterError(f"log_value must be a float, got {self.log_value!r}")
        object.__setattr__(self, "log_value", float(self.log_value))
        if math.isnan(self.log_value):
            raise InvalidParameterError("log_value must not be NaN")

    @property
    def value(self) -> float:
        """The odds on the natural scale (may overflow to inf for huge logs)."""
        try:
            return math.exp(self.log_value)
        except OverflowError:
            return math.inf

    @property
    def posterior(self) -> float:
        """P(X = 0 | evidence) implied by the odds."""
        return posterior_from_ratio(self)

    @classmethod
    def from_value(cls, value: float) -> "PosteriorRatio":
        if not isinstance(value, (int, float)) or isinstance(value, bool) or value < 0.0:
            raise InvalidParameterError(f"ratio must be a non-negative number, got {value!r}")
        return cls(log_value=math.log(value) if value > 0.0 else -math.inf)


@dataclass(frozen=True)
class Evidence:
    """What an observer saw: the source outcome (possibly repeated) and, for
    collusion, the target's own outcome.

    ``n_i > 1`` composes repeated suppressions only; repeated evidence that
    contains a release collapses to the single-release case because a release
    makes the record's non-sensitivity certain and later outcomes add nothing.
    """

    m_i: ReleaseOutcome | None = None
    n_i: int = 1
    m_j: ReleaseOutcome | None = None

    def __post_init__(self):
        check_query_count(self.n_i)
        for name in ("m_i", "m_j"):
            value = getattr(self, name)
            if value is not None and value not in (0, 1):
                raise InvalidParameterError(f"{name} must be a release outcome or None, got {value!r}")
        if self.n_i > 1 and self.m_i != ReleaseOutcome.SUPPRESSED:
            raise InvalidParameterError("n_i > 1 is only meaningful for repeated suppressions")


def prior_log_odds(theta: float) -> float:
    """log(theta / (1 - theta)) for a non-degenerate prior."""
    theta = _check_probability("theta", theta)
    if theta <= 0.0 or theta >= 1.0:
        raise DegeneratePriorError(f"prior must lie strictly inside (0, 1), got {theta}")
    return math.log(theta) - math.log1p(-theta)


def _log(x: float) -> float:
    return math.log(x) if x > 0.0 else -math.inf


def log_suppression_factor(dep: DependencyPair, epsilon_i: float) -> float:
    """Log of the odds factor a suppression of the source applies to the target.

    Computed as ``log(d1 + (1-d1) e^-eps) - log(d2 + (1-d2) e^-eps)``, an
    algebraically identical but overflow-free form of the natural-scale
    definition.
    """
    epsilon_i = _check_epsilon("epsilon_i", epsilon_i)
    if dep.is_independent:
        return 0.0
    q = math.exp(-epsilon_i)
    return _log(dep.delta1 + (1.0 - dep.delta1) * q) - _log(dep.delta2 + (1.0 - dep.delta2) * q)


def suppression_factor(dep: DependencyPair, epsilon_i: float) -> float:
    """Natural-scale suppression factor; 1 at epsilon 0 or for independent deltas."""
    return math.exp(log_suppression_factor(dep, epsilon_i))


def log_release_factor(dep: DependencyPair) -> float:
    """Log of the odds factor a release of the source applies to the target.

    ``-inf`` (factor 0) when delta1 = 1: a release then rules out target
    sensitivity entirely.
    """
    if dep.delta2 >= 1.0:
        raise DegenerateDependencyError(
            "delta2 = 1 makes a release contradict the target being non-sensitive;"
            " the posterior is a certainty, not a ratio"
        )
    return _log(1.0 - dep.delta1) - math.log1p(-dep.delta2)


def release_factor(dep: DependencyPair) -> float:
    """Natural-scale release factor ``(1 - delta1) / (1 - delta2)``."""
    return math.exp(log_release_factor(dep))


def posterior_ratio_self(theta_i: float, epsilon_i: float, n: int = 1) -> PosteriorRatio:
    """Posterior odds of a record's own sensitivity after n suppressions.

    The odds are the prior odds amplified by ``exp(n * epsilon)``.
    """
    epsilon_i = _check_epsilon("epsilon_i", epsilon_i)
    check_query_count(n)
    return PosteriorRatio(log_value=n * epsilon_i + prior_log_odds(theta_i))


def posterior_ratio_cross(
    theta_j: float,
    dep: DependencyPair,
    epsilon_i: float,
    m_i: ReleaseOutcome,
    n: int = 1,
) -> PosteriorRatio:
    """Posterior odds of the target's sensitivity given the source's outcome.

    ``n`` suppressions compose by replacing ``epsilon`` with ``n * epsilon``
    inside the suppression factor.  A release is absorbing evidence, so it is
    only valid with ``n = 1``.
    """
    epsilon_i = _check_epsilon("epsilon_i", epsilon_i)
    check_query_count(n)
    if m_i not in (0, 1):
        raise InvalidParameterError(f"m_i must be a release outcome, got {m_i!r}")
    prior = prior_log_odds(theta_j)
    if m_i == ReleaseOutcome.SUPPRESSED:
        return PosteriorRatio(log_value=log_suppression_factor(dep, n * epsilon_i) + prior)
    if n != 1:
        raise InvalidParameterError("release evidence cannot repeat; use n = 1")
    return PosteriorRatio(log_value=log_release_factor(dep) + prior)


def posterior_ratio_collusion(
    theta_j: float,
    dep: DependencyPair,
    epsilon_i: float,
    epsilon_j: float,
    m_i: ReleaseOutcome,
    m_j: ReleaseOutcome,
) -> PosteriorRatio:
    """Posterior odds of the target's sensitivity given both observers' outcomes.

    With the target's own record suppressed, the source's factor and the
    target's self amplification ``exp(epsilon_j)`` multiply.  With the
    target's record released the ratio is exactly 0.
    """
    epsilon_i = _check_epsilon("epsilon_i", epsilon_i)
    epsilon_j = _check_epsilon("epsilon_j", epsilon_j)
    for name, value in (("m_i", m_i), ("m_j", m_j)):
        if value not in (0, 1):
            raise InvalidParameterError(f"{name} must be a release outcome, got {value!r}")
    prior = prior_log_odds(theta_j)
    if m_i == ReleaseOutcome.RELEASED and dep.delta2 >= 1.0:
        raise DegenerateDependencyError(
            "delta2 = 1 makes a source release contradict the target being non-sensitive"
        )
    if m_j == ReleaseOutcome.RELEASED:
        return PosteriorRatio(log_value=-math.inf)
    if m_i == ReleaseOutcome.SUPPRESSED:
        factor = log_suppression_factor(dep, epsilon_i)
    else:
        factor = log_release_factor(dep)
    return PosteriorRatio(log_value=factor + epsilon_j + prior)


def posterior_from_ratio(r: PosteriorRatio) -> float:
    """P(X = 0 | evidence) = ratio / (1 + ratio), evaluated stably from the log."""
    lv = r.log_value
    if lv == -math.inf:
        return 0.0
    if lv == math.inf:
        return 1.0
    if lv >= 0.0:
        return 1.0 / (1.0 + math.exp(-lv))
    e = math.exp(lv)
    return e / (1.0 + e)

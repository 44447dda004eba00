"""Core domain types and the exact pairwise joint implied by their parameters.

Conventions used throughout the package:

* ``X = 0`` means the record takes the value its policy deems sensitive,
  ``X = 1`` otherwise.  ``theta`` is always ``P(X = 0)``.
* ``M = 0`` means the mechanism suppressed the record, ``M = 1`` that it
  released it.
* A dependency between two attributes is described by the conditional
  probabilities ``delta1 = P(X_src = 0 | X_tgt = 0)`` and
  ``delta2 = P(X_src = 0 | X_tgt = 1)``.

All types are immutable after construction and all operations are pure, so
everything here is safe for unrestricted parallel use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

from .errors import InvalidParameterError

#: Tolerance for validating user-supplied (empirical) probability data.
CONFIG_TOL = 1e-9
#: Tolerance for internal exact cross-checks.
INTERNAL_TOL = 1e-12


class SensitivityIndicator(IntEnum):
    """Whether a record takes the value that makes it sensitive (0) or not (1)."""

    SENSITIVE = 0
    NON_SENSITIVE = 1


class ReleaseOutcome(IntEnum):
    """Observable per-record output of the release mechanism."""

    SUPPRESSED = 0
    RELEASED = 1


def _check_probability(name: str, value: float) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidParameterError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def _check_epsilon(name: str, value: float) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidParameterError(f"{name} must be a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise InvalidParameterError(
            f"{name} must be finite and non-negative, got {value!r}"
        )
    return value


def check_query_count(n: int) -> int:
    """Validate a repeated-query count (positive integer)."""
    if isinstance(n, bool) or not isinstance(n, int):
        raise InvalidParameterError(f"query count must be an integer, got {n!r}")
    if n < 1:
        raise InvalidParameterError(f"query count must be >= 1, got {n}")
    return n


@dataclass(frozen=True)
class AttributeSpec:
    """One attribute's identity, prior sensitivity probability and privacy parameter.

    ``theta`` is the prior probability that a record of this attribute is
    sensitive; ``epsilon`` is the release parameter used by the mechanism
    (release probability ``1 - exp(-epsilon)`` for non-sensitive records).
    """

    id: str
    theta: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise InvalidParameterError(f"attribute id must be a non-empty string, got {self.id!r}")
        object.__setattr__(self, "theta", _check_probability("theta", self.theta))
        object.__setattr__(self, "epsilon", _check_epsilon("epsilon", self.epsilon))


@dataclass(frozen=True)
class DependencyPair:
    """Conditional sensitivity probabilities linking a source attribute to a target.

    ``delta1 = P(X_source = 0 | X_target = 0)`` and
    ``delta2 = P(X_source = 0 | X_target = 1)``.  Equal deltas mean the two
    sensitivity indicators are independent.
    """

    source: str
    target: str
    delta1: float
    delta2: float

    def __post_init__(self):
        for name in ("source", "target"):
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise InvalidParameterError(f"{name} must be a non-empty string, got {value!r}")
        if self.source == self.target:
            raise InvalidParameterError(
                f"dependency source and target must differ, both are {self.source!r}"
            )
        object.__setattr__(self, "delta1", _check_probability("delta1", self.delta1))
        object.__setattr__(self, "delta2", _check_probability("delta2", self.delta2))

    @property
    def is_independent(self) -> bool:
        return self.delta1 == self.delta2


@dataclass(frozen=True)
class JointDistribution2:
    """Exact joint distribution of two binary sensitivity indicators.

    Index order is source first: ``p01 = P(X_src = 0, X_tgt = 1)``.
    """

    p00: float
    p01: float
    p10: float
    p11: float

    def __post_init__(self):
        for name in ("p00", "p01", "p10", "p11"):
            object.__setattr__(self, name, _check_probability(name, getattr(self, name)))
        total = self.p00 + self.p01 + self.p10 + self.p11
        if abs(total - 1.0) > INTERNAL_TOL:
            raise InvalidParameterError(f"joint entries must sum to 1, got {total!r}")

    def source_marginal(self) -> float:
        """P(X_src = 0) implied by the joint."""
        return self.p00 + self.p01

    def target_marginal(self) -> float:
        """P(X_tgt = 0) implied by the joint."""
        return self.p00 + self.p10

    def recover_dependency(self, source: str = "i", target: str = "j") -> DependencyPair:
        """Recompute (delta1, delta2) from the joint.

        Requires both target columns to have positive mass.
        """
        col0 = self.p00 + self.p10
        col1 = self.p01 + self.p11
        if col0 <= 0.0 or col1 <= 0.0:
            raise InvalidParameterError(
                "cannot recover conditionals: a target column has zero probability"
            )
        return DependencyPair(
            source=source,
            target=target,
            delta1=self.p00 / col0,
            delta2=self.p01 / col1,
        )


def joint_from_marginal_and_deps(theta_j: float, dep: DependencyPair) -> JointDistribution2:
    """Build the exact source/target joint from the target prior and the conditionals.

    ``p00 = delta1 * theta_j``, ``p10 = (1 - delta1) * theta_j``,
    ``p01 = delta2 * (1 - theta_j)``, ``p11 = (1 - delta2) * (1 - theta_j)``;
    the implied source prior is ``delta1 * theta_j + delta2 * (1 - theta_j)``.
    """
    theta_j = _check_probability("theta_j", theta_j)
    return JointDistribution2(
        p00=dep.delta1 * theta_j,
        p01=dep.delta2 * (1.0 - theta_j),
        p10=(1.0 - dep.delta1) * theta_j,
        p11=(1.0 - dep.delta2) * (1.0 - theta_j),
    )


def validate_consistency(
    theta_i: float,
    theta_j: float,
    dep: DependencyPair,
    tol: float = CONFIG_TOL,
) -> bool:
    """True iff the declared source prior matches the one implied by the dependency.

    Checks ``|theta_i - (delta1 * theta_j + delta2 * (1 - theta_j))| <= tol``.
    """
    theta_i = _check_probability("theta_i", theta_i)
    theta_j = _check_probability("theta_j", theta_j)
    if not (isinstance(tol, (int, float)) and tol >= 0.0):
        raise InvalidParameterError(f"tol must be non-negative, got {tol!r}")
    implied = dep.delta1 * theta_j + dep.delta2 * (1.0 - theta_j)
    return abs(theta_i - implied) <= tol

"""Information-theoretic leakage of one attribute's mechanism output.

A single attribute's output leaks about its own sensitivity indicator and,
through statistical dependency, about every declared dependent attribute.
The per-attribute total is the sum of those mutual informations, an explicit
function of the attribute's release parameter epsilon.

All quantities are reported in bits (`LOG_BASE` = 2); changing the constant
changes the unit everywhere consistently.  `binary_entropy`, `mi_self` and
`mi_cross` broadcast over numpy arrays in their probability/epsilon
arguments, which the budget optimizer relies on for dense epsilon grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit, xlogy

from .errors import DegenerateDependencyError, InvalidParameterError
from .model import AttributeSpec, DependencyPair, INTERNAL_TOL, _check_epsilon

#: Logarithm base for all entropy and mutual-information values (2 = bits).
LOG_BASE = 2.0


def _as_unit(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise InvalidParameterError(f"{name} must lie in [0, 1]")
    return arr


def _as_epsilon(name, value):
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0):
        raise InvalidParameterError(f"{name} must be finite and non-negative")
    return arr


def _maybe_scalar(scalar_in: bool, arr):
    return float(arr) if scalar_in and np.ndim(arr) == 0 else arr


def binary_entropy(theta):
    """Entropy of a Bernoulli(theta) variable, with 0 log 0 = 0."""
    t = _as_unit("theta", theta)
    h = -(xlogy(t, t) + xlogy(1.0 - t, 1.0 - t)) / math.log(LOG_BASE)
    return _maybe_scalar(np.ndim(theta) == 0, h)


def mi_self(theta_i, epsilon_i):
    """Mutual information between a record's sensitivity and its own output.

    Equals ``H(theta) - H(theta / P(M=0)) * P(M=0)`` with
    ``P(M=0) = theta + exp(-eps) * (1 - theta)``: the released branch carries
    no sensitivity uncertainty, so only the suppressed branch contributes
    conditional entropy.  Zero at epsilon 0, approaching ``H(theta)`` as
    epsilon grows.
    """
    scalar_in = np.ndim(theta_i) == 0 and np.ndim(epsilon_i) == 0
    t = _as_unit("theta_i", theta_i)
    e = _as_epsilon("epsilon_i", epsilon_i)
    q = np.exp(-e)
    p_suppressed = t + q * (1.0 - t)
    posterior = np.where(p_suppressed > 0.0, t / np.where(p_suppressed > 0.0, p_suppressed, 1.0), 0.0)
    mi = binary_entropy(t) - binary_entropy(posterior) * p_suppressed
    mi = np.maximum(np.asarray(mi, dtype=float), 0.0)
    return _maybe_scalar(scalar_in, mi)


def mi_cross(theta_j, dep: DependencyPair, epsilon_i):
    """Mutual information between a dependent attribute's sensitivity and the
    source attribute's output.

    The source prior is implied by consistency,
    ``theta_i = delta1 * theta_j + delta2 * (1 - theta_j)``.  The suppressed
    and released branches weigh the entropies of the two conditional
    posteriors, which are recovered from the odds factors through the
    logistic transform (stable at extreme epsilon).  Degenerate target priors
    carry no uncertainty, so the value is 0 there.
    """
    scalar_in = np.ndim(theta_j) == 0 and np.ndim(epsilon_i) == 0
    t_j = _as_unit("theta_j", theta_j)
    e = _as_epsilon("epsilon_i", epsilon_i)
    if np.ndim(t_j) == 0 and (t_j <= 0.0 or t_j >= 1.0):
        return 0.0 if np.ndim(e) == 0 else np.zeros_like(e)

    d1, d2 = dep.delta1, dep.delta2
    theta_i = d1 * t_j + d2 * (1.0 - t_j)
    q = np.exp(-e)
    w_suppressed = theta_i + q * (1.0 - theta_i)
    w_released = (1.0 - q) * (1.0 - theta_i)

    if d2 >= 1.0 and np.any(w_released > 0.0):
        raise DegenerateDependencyError(
            "delta2 = 1 with a positive release probability makes the released-branch"
            " posterior a certainty, not a ratio"
        )

    with np.errstate(divide="ignore"):
        logit_j = np.log(t_j) - np.log1p(-t_j)
        if dep.is_independent:
            log_f1 = np.zeros_like(q)
        else:
            log_f1 = np.log(d1 + (1.0 - d1) * q) - np.log(d2 + (1.0 - d2) * q)
    post_suppressed = expit(log_f1 + logit_j)
    if d2 >= 1.0:
        h_released = 0.0
    else:
        log_f2 = (math.log(1.0 - d1) if d1 < 1.0 else -math.inf) - math.log1p(-d2)
        post_released = expit(log_f2 + logit_j)
        h_released = binary_entropy(post_released)

    mi = (
        binary_entropy(t_j)
        - binary_entropy(post_suppressed) * w_suppressed
        - h_released * w_released
    )
    mi = np.maximum(np.asarray(mi, dtype=float), 0.0)
    return _maybe_scalar(scalar_in, mi)


@dataclass(frozen=True)
class LeakageTerm:
    """One mutual-information contribution, in bits.

    ``target == source`` marks the self term.
    """

    source: str
    target: str
    bits: float

    def __post_init__(self):
        if not 0.0 <= self.bits <= 1.0 + INTERNAL_TOL:
            raise InvalidParameterError(
                f"a binary-variable MI must lie in [0, 1] bits, got {self.bits!r}"
            )


@dataclass(frozen=True)
class LeakageProfile:
    """Per-attribute breakdown of total information leakage at one epsilon."""

    attribute_id: str
    epsilon: float
    self_term: LeakageTerm
    cross_terms: tuple[LeakageTerm, ...]
    total: float

    def __post_init__(self):
        expected = self.self_term.bits + sum(term.bits for term in self.cross_terms)
        if abs(self.total - expected) > INTERNAL_TOL:
            raise InvalidParameterError("total must equal the sum of its terms")


def total_leakage(
    attr: AttributeSpec,
    deps: Sequence[tuple[float, DependencyPair]] = (),
) -> LeakageProfile:
    """Total leakage of one attribute's output: self MI plus all declared cross MIs.

    ``deps`` lists ``(theta_target, dependency)`` pairs whose source is this
    attribute.  The sum ranges over exactly the declared pairs; declaring both
    directions of a relationship elsewhere double counts by construction.
    """
    epsilon = _check_epsilon("epsilon", attr.epsilon)
    self_term = LeakageTerm(attr.id, attr.id, mi_self(attr.theta, epsilon))
    cross_terms = []
    for theta_target, dep in deps:
        if dep.source != attr.id:
            raise InvalidParameterError(
                f"dependency {dep.source!r}->{dep.target!r} does not originate at {attr.id!r}"
            )
        cross_terms.append(LeakageTerm(attr.id, dep.target, mi_cross(theta_target, dep, epsilon)))
    total = self_term.bits + sum(term.bits for term in cross_terms)
    return LeakageProfile(
        attribute_id=attr.id,
        epsilon=epsilon,
        self_term=self_term,
        cross_terms=tuple(cross_terms),
        total=total,
    )

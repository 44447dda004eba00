"""Independent verification oracles for the release mechanism's leakage.

Two deliberately separate routes check every closed form in the package:

* `enumerate_joint` builds the exact finite distribution of
  ``(X_src, X_tgt, M_src^1..M_src^n, M_tgt)`` straight from the generative
  model (pairwise joint, then independent per-query release decisions), so
  conditional atom sums validate the posterior-odds algebra and the
  mutual-information formulas without sharing any of their code.
* `simulate` pushes seeded samples through the *real* mechanism module, so
  it also validates that the implemented mechanism matches the generative
  model the enumeration assumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    DimensionTooLargeError,
    InvalidParameterError,
    ZeroProbabilityEvidenceError,
)
from .infoleak import LOG_BASE
from .leakage import Evidence, PosteriorRatio
from .mechanism import check_seed, release_stream
from .model import (
    DependencyPair,
    ReleaseOutcome,
    _check_epsilon,
    _check_probability,
    check_query_count,
    joint_from_marginal_and_deps,
)

#: Enumeration is limited to 2**(n+3) atoms; beyond this the state space is too big.
MAX_QUERIES = 20


@dataclass(frozen=True)
class ScenarioSpec:
    """A two-attribute scenario: target prior, dependency, release parameters
    and how many independent queries hit the source record."""

    theta_j: float
    dep: DependencyPair
    epsilon_i: float
    epsilon_j: float = 0.0
    n_queries: int = 1

    def __post_init__(self):
        object.__setattr__(self, "theta_j", _check_probability("theta_j", self.theta_j))
        object.__setattr__(self, "epsilon_i", _check_epsilon("epsilon_i", self.epsilon_i))
        object.__setattr__(self, "epsilon_j", _check_epsilon("epsilon_j", self.epsilon_j))
        check_query_count(self.n_queries)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Exact atom probabilities, indexed ``[x_i, x_j, pattern, m_j]``.

    ``pattern`` encodes the n source query outcomes as bits (bit k set means
    query k released the record).
    """

    n_queries: int
    probs: np.ndarray

    def atoms(self):
        """Yield ((x_i, x_j, pattern, m_j), probability) for every atom."""
        for index, p in np.ndenumerate(self.probs):
            yield index, float(p)

    def total(self) -> float:
        return float(self.probs.sum())


@lru_cache(maxsize=8)
def _popcounts(n: int) -> np.ndarray:
    patterns = np.arange(1 << n, dtype=np.uint32)
    counts = np.zeros(1 << n, dtype=np.int64)
    for bit in range(n):
        counts += (patterns >> bit) & 1
    return counts


def enumerate_joint(s: ScenarioSpec) -> OutcomeDistribution:
    """Exact distribution of the full generative process.

    The pair ``(X_i, X_j)`` follows the joint implied by the scenario's prior
    and dependency; given its indicator every query outcome is an independent
    release decision (probability ``1 - exp(-eps)`` of release for a
    non-sensitive record, 0 for a sensitive one).
    """
    n = s.n_queries
    if n > MAX_QUERIES:
        raise DimensionTooLargeError(f"{n} queries would need 2**{n + 3} atoms; max is {MAX_QUERIES}")
    joint = joint_from_marginal_and_deps(s.theta_j, s.dep)
    p_pair = np.array([[joint.p00, joint.p01], [joint.p10, joint.p11]])

    release_i = -math.expm1(-s.epsilon_i)
    suppress_i = math.exp(-s.epsilon_i)
    ones = _popcounts(n)
    pattern_given_x = np.zeros((2, 1 << n))
    pattern_given_x[0, 0] = 1.0  # sensitive records are never released
    pattern_given_x[1] = release_i ** ones * suppress_i ** (n - ones)

    release_j = -math.expm1(-s.epsilon_j)
    mj_given_x = np.array([[1.0, 0.0], [math.exp(-s.epsilon_j), release_j]])

    probs = (
        p_pair[:, :, None, None]
        * pattern_given_x[:, None, :, None]
        * mj_given_x[None, :, None, :]
    )
    return OutcomeDistribution(n_queries=n, probs=probs)


def _evidence_weights(dist: OutcomeDistribution, evidence: Evidence) -> np.ndarray:
    """Probability mass of the evidence event, split by (x_i, x_j)."""
    n = dist.n_queries
    probs = dist.probs
    if evidence.m_i is not None:
        if evidence.n_i > n:
            raise InvalidParameterError(
                f"evidence repeats {evidence.n_i} outcomes but the scenario has {n} queries"
            )
        patterns = np.arange(1 << n)
        if evidence.m_i == ReleaseOutcome.SUPPRESSED:
            mask = (patterns & ((1 << evidence.n_i) - 1)) == 0
        else:
            mask = (patterns & 1) == 1
        probs = probs[:, :, mask, :]
    if evidence.m_j is not None:
        probs = probs[..., [int(evidence.m_j)]]
    return probs.sum(axis=(2, 3))


def exact_posterior_ratio(
    s: ScenarioSpec,
    evidence: Evidence,
    target: str = "j",
) -> PosteriorRatio:
    """Ground-truth posterior odds of a sensitivity indicator by atom sums.

    ``target`` selects whose odds are computed: ``"i"`` for the queried
    attribute itself, ``"j"`` for the dependent one.
    """
    if target not in ("i", "j"):
        raise InvalidParameterError(f"target must be 'i' or 'j', got {target!r}")
    weights = _evidence_weights(enumerate_joint(s), evidence)
    by_target = weights.sum(axis=1) if target == "i" else weights.sum(axis=0)
    numerator, denominator = float(by_target[0]), float(by_target[1])
    if numerator + denominator <= 0.0:
        raise ZeroProbabilityEvidenceError(f"evidence {evidence} has probability 0 under {s}")
    if numerator == 0.0:
        return PosteriorRatio(log_value=-math.inf)
    if denominator == 0.0:
        return PosteriorRatio(log_value=math.inf)
    return PosteriorRatio(log_value=math.log(numerator) - math.log(denominator))


def _mi_from_joint(joint: np.ndarray) -> float:
    rows = joint.sum(axis=1, keepdims=True)
    cols = joint.sum(axis=0, keepdims=True)
    total = 0.0
    for idx, p in np.ndenumerate(joint):
        if p > 0.0:
            total += p * math.log(p / (rows[idx[0], 0] * cols[0, idx[1]]))
    return max(total / math.log(LOG_BASE), 0.0)


def exact_mi(s: ScenarioSpec, pair: str) -> float:
    """Mutual information (bits) from the enumerated joint.

    ``pair = "self"`` marginalizes to ``(X_i, M_i^1)``, ``"cross"`` to
    ``(X_j, M_i^1)``.
    """
    if pair not in ("self", "cross"):
        raise InvalidParameterError(f"pair must be 'self' or 'cross', got {pair!r}")
    dist = enumerate_joint(s)
    released = (np.arange(1 << dist.n_queries) & 1) == 1
    by_outcome = np.stack(
        [dist.probs[:, :, ~released, :].sum(axis=(2, 3)), dist.probs[:, :, released, :].sum(axis=(2, 3))],
        axis=-1,
    )  # (x_i, x_j, m)
    axis = 1 if pair == "self" else 0
    joint_xm = by_outcome.sum(axis=axis)
    return _mi_from_joint(joint_xm)


def check_exclusion_freedom(theta: float, epsilon: float) -> float:
    """Largest posterior-to-prior odds amplification over observable outcomes.

    Enumerates the single-query distribution and compares each outcome's
    posterior odds of sensitivity against the prior odds; outcomes with zero
    probability are not observable and are skipped.  For this mechanism the
    maximum is attained at suppression and equals ``exp(epsilon)``.
    """
    theta = _check_probability("theta", theta)
    if theta <= 0.0 or theta >= 1.0:
        raise InvalidParameterError("theta must lie strictly inside (0, 1)")
    scenario = ScenarioSpec(
        theta_j=theta,
        dep=DependencyPair(source="self", target="peer", delta1=theta, delta2=theta),
        epsilon_i=epsilon,
    )
    dist = enumerate_joint(scenario)
    by_x_and_m = dist.probs.sum(axis=(1, 3))  # (x_i, pattern) with n = 1
    prior = by_x_and_m.sum(axis=1)
    prior_odds = prior[0] / prior[1]
    worst = 0.0
    for m in (0, 1):
        p0, p1 = by_x_and_m[0, m], by_x_and_m[1, m]
        if p0 + p1 <= 0.0:
            continue
        amplification = 0.0 if p0 == 0.0 else (p0 / p1) / prior_odds
        worst = max(worst, amplification)
    return worst


@dataclass(frozen=True)
class EmpiricalEstimate:
    """A Monte-Carlo estimate with its standard error."""

    value: float
    stderr: float
    samples: int

    def __post_init__(self):
        if self.stderr < 0.0:
            raise InvalidParameterError("stderr must be non-negative")
        if self.samples < 1:
            raise InvalidParameterError("an estimate needs at least one sample")


@dataclass(frozen=True)
class SimulationResult:
    """Named estimates from one seeded simulation run.

    Estimates whose conditioning event never occurred are reported in
    ``zero_evidence`` and absent from ``estimates``.
    """

    estimates: dict[str, EmpiricalEstimate]
    zero_evidence: tuple[str, ...]
    samples: int
    seed: int


def _frequency(mask_value: np.ndarray, mask_given: np.ndarray) -> EmpiricalEstimate | None:
    m = int(mask_given.sum())
    if m == 0:
        return None
    p = float((mask_value & mask_given).sum()) / m
    return EmpiricalEstimate(value=p, stderr=math.sqrt(p * (1.0 - p) / m), samples=m)


def _plugin_mi(x: np.ndarray, m: np.ndarray) -> EmpiricalEstimate:
    n = x.size
    counts = np.bincount(2 * x.astype(np.int64) + m.astype(np.int64), minlength=4).reshape(2, 2)
    joint = counts / n
    mi = _mi_from_joint(joint)
    # Delta-method variance: spread of the pointwise information terms.
    rows = joint.sum(axis=1, keepdims=True)
    cols = joint.sum(axis=0, keepdims=True)
    second = 0.0
    for idx, p in np.ndenumerate(joint):
        if p > 0.0:
            term = math.log(p / (rows[idx[0], 0] * cols[0, idx[1]])) / math.log(LOG_BASE)
            second += p * term * term
    variance = max(second - mi * mi, 0.0)
    return EmpiricalEstimate(value=mi, stderr=math.sqrt(variance / n), samples=n)


def simulate(s: ScenarioSpec, samples: int, seed: int) -> SimulationResult:
    """Seeded end-to-end Monte Carlo through the real mechanism.

    Draws ``(X_i, X_j)`` pairs from the scenario's joint, runs every query
    through `release_stream` (per-use seeds derived as ``seed XOR k`` with
    ``k = 1..n`` for the source queries and ``k = n + 1`` for the target
    query), and reports release frequencies, conditional posterior estimates
    and plug-in mutual informations with binomial / delta-method standard
    errors.
    """
    if isinstance(samples, bool) or not isinstance(samples, int) or samples < 10_000:
        raise InvalidParameterError(f"need at least 10000 samples, got {samples!r}")
    seed = check_seed(seed)

    rng = np.random.default_rng(seed)
    x_j = (rng.random(samples) >= s.theta_j).astype(np.uint8)
    p_sensitive = np.where(x_j == 0, s.dep.delta1, s.dep.delta2)
    x_i = (rng.random(samples) >= p_sensitive).astype(np.uint8)

    n = s.n_queries
    m_i = np.stack(
        [release_stream(x_i, s.epsilon_i, seed ^ (q + 1)) for q in range(n)]
    )
    m_j = release_stream(x_j, s.epsilon_j, seed ^ (n + 1))

    first_suppressed = m_i[0] == 0
    first_released = ~first_suppressed
    all_suppressed = (m_i == 0).all(axis=0)
    i_sensitive = x_i == 0
    j_sensitive = x_j == 0
    everything = np.ones(samples, dtype=bool)

    candidates = {
        "release_rate_i": _frequency(m_i[0] == 1, everything),
        "posterior_i_given_suppressed_n": _frequency(i_sensitive, all_suppressed),
        "posterior_i_given_released": _frequency(i_sensitive, first_released),
        "posterior_j_given_suppressed_n": _frequency(j_sensitive, all_suppressed),
        "posterior_j_given_released": _frequency(j_sensitive, first_released),
        "posterior_j_given_collusion_suppressed": _frequency(
            j_sensitive, first_suppressed & (m_j == 0)
        ),
        "posterior_j_given_collusion_released": _frequency(
            j_sensitive, first_released & (m_j == 0)
        ),
        "mi_self_plugin": _plugin_mi(x_i, m_i[0]),
        "mi_cross_plugin": _plugin_mi(x_j, m_i[0]),
    }
    estimates = {name: est for name, est in candidates.items() if est is not None}
    zero = tuple(name for name, est in candidates.items() if est is None)
    return SimulationResult(estimates=estimates, zero_evidence=zero, samples=samples, seed=seed)

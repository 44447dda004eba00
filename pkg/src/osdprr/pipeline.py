"""End-to-end occupancy workflow.

Ingests binary occupancy traces from CSV, extracts per-day attributes
(start/end of occupancy, exits, time away, occupancy fraction), labels each
per-day attribute record sensitive or not via policy rules, estimates priors
and dependency conditionals empirically with additive smoothing, and
assembles leakage reports (posterior-ratio tables, per-attribute
mutual-information profiles and, when a budget is configured, an epsilon
allocation).

The mechanism treats every (space, day, attribute) value as one record.
Sampling gaps hold the last observed value: a transition needs two
consecutive samples that differ.  Timestamps are taken as given
(offset-aware) and days are partitioned in each timestamp's own offset.
"""

from __future__ import annotations

import csv
import io
import json
import math
import operator
import warnings
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta

from .errors import (
    InconsistentEstimateWarning,
    InsufficientDataWarning,
    InvalidParameterError,
    OsdprrError,
    TraceParseError,
)
from .infoleak import total_leakage
from .leakage import (
    PosteriorRatio,
    posterior_ratio_collusion,
    posterior_ratio_cross,
    posterior_ratio_self,
)
from .mechanism import check_seed, release_stream
from .model import (
    AttributeSpec,
    DependencyPair,
    ReleaseOutcome,
    SensitivityIndicator,
    joint_from_marginal_and_deps,
    validate_consistency,
)
from .optimizer import Allocation, BudgetProblem, allocate_budget

CSV_HEADER = ["timestamp", "space_id", "occupied"]

#: Attribute names produced by extraction; policy rules must reference these.
ATTRIBUTE_NAMES = (
    "start_time",
    "end_time",
    "exit_count",
    "mean_away_minutes",
    "occupancy_fraction",
)
_TIME_VALUED = frozenset({"start_time", "end_time"})

DEFAULT_WORK_HOURS = (time(8, 0), time(17, 0))
DEFAULT_DAY_SPLIT = time(0, 0)

_COMPARATORS = {
    "<": operator.lt,
    ">": operator.gt,
    "<=": operator.le,
    ">=": operator.ge,
    "≤": operator.le,
    "≥": operator.ge,
}


@dataclass(frozen=True)
class OccupancyTrace:
    """Time-ordered binary occupancy samples for one space."""

    space_id: str
    samples: tuple[tuple[datetime, int], ...]

    def __post_init__(self):
        if not isinstance(self.space_id, str) or not self.space_id:
            raise InvalidParameterError("space_id must be a non-empty string")
        previous = None
        for ts, occupied in self.samples:
            if occupied not in (0, 1):
                raise InvalidParameterError(f"occupancy must be 0 or 1, got {occupied!r}")
            if ts.tzinfo is None or ts.utcoffset() is None:
                raise InvalidParameterError("timestamps must carry a UTC offset")
            if previous is not None and ts <= previous:
                raise InvalidParameterError(
                    f"timestamps must be strictly increasing within {self.space_id!r}"
                )
            previous = ts


@dataclass(frozen=True)
class ExtractedAttributes:
    """Per-day attributes of one space.

    ``start_time`` is the first rise (0 to 1) of the day, ``end_time`` the
    last fall; both are absent on days without the corresponding transition.
    ``mean_away_minutes`` averages the gaps between a fall and the next rise
    within the day and is absent when no such pair exists.
    """

    space_id: str
    day: date
    start_time: datetime | None
    end_time: datetime | None
    exit_count: int
    mean_away_minutes: float | None
    occupancy_fraction: float

    def __post_init__(self):
        if self.exit_count < 0:
            raise InvalidParameterError("exit_count must be >= 0")
        if not 0.0 <= self.occupancy_fraction <= 1.0:
            raise InvalidParameterError("occupancy_fraction must lie in [0, 1]")
        if self.start_time is not None and self.end_time is not None:
            if self.start_time > self.end_time:
                raise InvalidParameterError("start_time must not exceed end_time")


@dataclass(frozen=True)
class PolicyRule:
    """Marks a record sensitive when ``value <comparator> threshold`` holds.

    Thresholds for ``start_time``/``end_time`` are times of day; the other
    attributes compare numerically.
    """

    attribute: str
    comparator: str
    threshold: time | float

    def __post_init__(self):
        if self.attribute not in ATTRIBUTE_NAMES:
            raise InvalidParameterError(
                f"unknown attribute {self.attribute!r}; extraction produces {ATTRIBUTE_NAMES}"
            )
        if self.comparator not in _COMPARATORS:
            raise InvalidParameterError(f"comparator must be one of {sorted(_COMPARATORS)}")
        if self.attribute in _TIME_VALUED:
            if not isinstance(self.threshold, time):
                raise InvalidParameterError(f"{self.attribute} rules need a time-of-day threshold")
        elif isinstance(self.threshold, bool) or not isinstance(self.threshold, (int, float)):
            raise InvalidParameterError(f"{self.attribute} rules need a numeric threshold")

    def matches(self, value) -> bool:
        return _COMPARATORS[self.comparator](value, self.threshold)


def _parse_instant(text: str) -> datetime:
    cleaned = text.strip()
    if cleaned.endswith(("Z", "z")):
        cleaned = cleaned[:-1] + "+00:00"
    ts = datetime.fromisoformat(cleaned)
    if ts.tzinfo is None or ts.utcoffset() is None:
        raise ValueError("timestamp must carry a UTC offset")
    return ts


def parse_time_of_day(text: str) -> time:
    """Parse "HH:MM" or "HH:MM:SS" into a time of day."""
    parsed = time.fromisoformat(text)
    if parsed.tzinfo is not None:
        raise InvalidParameterError(f"time of day must not carry an offset: {text!r}")
    return parsed


def ingest_csv(path) -> list[OccupancyTrace]:
    """Read occupancy traces, grouped by space and sorted by time.

    The header must be exactly ``timestamp,space_id,occupied``.  Rows may
    arrive in any order; duplicate timestamps within a space are rejected.
    Errors name the offending 1-based line.
    """
    by_space: dict[str, list[tuple[datetime, int, int]]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise TraceParseError(
                f"expected header {','.join(CSV_HEADER)!r}, got {header!r}", line_number=1
            )
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise TraceParseError(f"expected 3 fields, got {len(row)}", line_number)
            raw_ts, space_id, raw_occupied = row
            try:
                ts = _parse_instant(raw_ts)
            except ValueError as exc:
                raise TraceParseError(f"bad timestamp {raw_ts!r}: {exc}", line_number) from exc
            if not space_id:
                raise TraceParseError("space_id must not be empty", line_number)
            if raw_occupied.strip() not in ("0", "1"):
                raise TraceParseError(
                    f"occupied must be 0 or 1, got {raw_occupied!r}", line_number
                )
            by_space.setdefault(space_id, []).append((ts, int(raw_occupied), line_number))

    traces = []
    for space_id in sorted(by_space):
        rows = sorted(by_space[space_id], key=lambda item: item[0])
        for earlier, later in zip(rows, rows[1:]):
            if earlier[0] == later[0]:
                raise TraceParseError(
                    f"duplicate timestamp {later[0].isoformat()} in space {space_id!r}",
                    line_number=later[2],
                )
        traces.append(
            OccupancyTrace(space_id, tuple((ts, occ) for ts, occ, _ in rows))
        )
    return traces


def extract_attributes(
    trace: OccupancyTrace,
    work_hours: tuple[time, time] = DEFAULT_WORK_HOURS,
    day_split: time = DEFAULT_DAY_SPLIT,
) -> list[ExtractedAttributes]:
    """Per-day attributes of one trace.

    Days are split at ``day_split`` in each sample's own offset; the
    occupancy fraction counts samples whose wall time lies in
    ``[work_start, work_end)``.
    """
    work_start, work_end = work_hours
    if not work_start < work_end:
        raise InvalidParameterError("work_hours must be an increasing (start, end) pair")
    offset = timedelta(
        hours=day_split.hour, minutes=day_split.minute, seconds=day_split.second
    )

    by_day: dict[date, list[tuple[datetime, int]]] = {}
    for ts, occupied in trace.samples:
        by_day.setdefault((ts - offset).date(), []).append((ts, occupied))

    results = []
    for day in sorted(by_day):
        samples = by_day[day]
        rises = [cur_ts for (_, prev), (cur_ts, cur) in zip(samples, samples[1:]) if prev == 0 and cur == 1]
        falls = [cur_ts for (_, prev), (cur_ts, cur) in zip(samples, samples[1:]) if prev == 1 and cur == 0]
        start = rises[0] if rises else None
        end = falls[-1] if falls else None
        if start is not None and end is not None and end < start:
            # Day began occupied: the falls precede the first observed arrival,
            # so no day-end departure was observed.
            end = None

        away_minutes = []
        rise_pos = 0
        for fall in falls:
            while rise_pos < len(rises) and rises[rise_pos] <= fall:
                rise_pos += 1
            if rise_pos < len(rises):
                away_minutes.append((rises[rise_pos] - fall).total_seconds() / 60.0)
                rise_pos += 1
        mean_away = sum(away_minutes) / len(away_minutes) if away_minutes else None

        in_hours = [occ for ts, occ in samples if work_start <= ts.time() < work_end]
        fraction = sum(in_hours) / len(in_hours) if in_hours else 0.0

        results.append(
            ExtractedAttributes(
                space_id=trace.space_id,
                day=day,
                start_time=start,
                end_time=end,
                exit_count=len(falls),
                mean_away_minutes=mean_away,
                occupancy_fraction=fraction,
            )
        )
    return results


def _record_value(record: ExtractedAttributes, attribute: str):
    value = getattr(record, attribute)
    if value is None:
        return None
    if attribute in _TIME_VALUED:
        return value.time()
    return value


def label_sensitivity(records, rules) -> dict[str, dict[tuple[str, date], SensitivityIndicator]]:
    """Per-record sensitivity indicators, keyed by attribute then (space, day).

    A record is sensitive when any rule for its attribute matches; attributes
    without rules are never sensitive.  Absent values produce no record.
    """
    rules = list(rules)
    for rule in rules:
        if rule.attribute not in ATTRIBUTE_NAMES:
            raise InvalidParameterError(f"rule references unknown attribute {rule.attribute!r}")
    labels: dict[str, dict] = {name: {} for name in ATTRIBUTE_NAMES}
    for record in records:
        key = (record.space_id, record.day)
        for name in ATTRIBUTE_NAMES:
            value = _record_value(record, name)
            if value is None:
                continue
            matched = any(rule.attribute == name and rule.matches(value) for rule in rules)
            labels[name][key] = (
                SensitivityIndicator.SENSITIVE if matched else SensitivityIndicator.NON_SENSITIVE
            )
    return labels


def estimate_parameters(
    labels,
    pairs=(),
    alpha: float = 1.0,
    consistency_tol: float = 0.05,
):
    """Smoothed empirical priors and dependency conditionals.

    ``theta = (count_sensitive + alpha) / (n + 2 alpha)`` per attribute, and
    for each requested ``(source, target)`` pair the conditionals come from
    the co-observed records, smoothed the same way.  Empty conditioning cells
    warn (`InsufficientDataWarning`) but still return the smoothed value;
    estimates that disagree with the implied marginal beyond
    ``consistency_tol`` warn (`InconsistentEstimateWarning`) but are kept.
    """
    if alpha <= 0.0:
        raise InvalidParameterError("alpha must be positive")
    thetas = {}
    for name, records in labels.items():
        if not records:
            continue
        n = len(records)
        sensitive = sum(1 for x in records.values() if x == SensitivityIndicator.SENSITIVE)
        thetas[name] = (sensitive + alpha) / (n + 2.0 * alpha)

    deps = []
    for source, target in pairs:
        for name in (source, target):
            if name not in labels or not labels[name]:
                raise InvalidParameterError(f"no labeled records for attribute {name!r}")
        shared = labels[source].keys() & labels[target].keys()
        if not shared:
            raise InvalidParameterError(
                f"no co-observed records for pair ({source!r}, {target!r})"
            )
        target_sensitive = sum(1 for key in shared if labels[target][key] == 0)
        target_benign = len(shared) - target_sensitive
        both = sum(1 for key in shared if labels[source][key] == 0 and labels[target][key] == 0)
        source_only = sum(1 for key in shared if labels[source][key] == 0 and labels[target][key] == 1)
        for count, condition in ((target_sensitive, "sensitive"), (target_benign, "non-sensitive")):
            if count == 0:
                warnings.warn(
                    f"pair ({source!r}, {target!r}): no records with {target!r} {condition};"
                    " returning the smoothed estimate",
                    InsufficientDataWarning,
                    stacklevel=2,
                )
        dep = DependencyPair(
            source=source,
            target=target,
            delta1=(both + alpha) / (target_sensitive + 2.0 * alpha),
            delta2=(source_only + alpha) / (target_benign + 2.0 * alpha),
        )
        if not validate_consistency(thetas[source], thetas[target], dep, consistency_tol):
            warnings.warn(
                f"pair ({source!r}, {target!r}): estimated conditionals imply a source prior"
                f" inconsistent with the estimated {thetas[source]:.4f} beyond {consistency_tol}",
                InconsistentEstimateWarning,
                stacklevel=2,
            )
        deps.append(dep)
    _warn_mutual_inconsistency(thetas, deps, consistency_tol)
    return thetas, deps


def _warn_mutual_inconsistency(thetas, deps, tol):
    """Flag (never reject) pairs declared in both directions whose implied
    joints disagree."""
    by_pair = {(dep.source, dep.target): dep for dep in deps}
    for (source, target), dep in by_pair.items():
        reverse = by_pair.get((target, source))
        if reverse is None or source > target:
            continue
        if source not in thetas or target not in thetas:
            continue
        forward = joint_from_marginal_and_deps(thetas[target], dep)
        backward = joint_from_marginal_and_deps(thetas[source], reverse)
        worst = max(
            abs(forward.p00 - backward.p00),
            abs(forward.p01 - backward.p10),
            abs(forward.p10 - backward.p01),
            abs(forward.p11 - backward.p11),
        )
        if worst > tol:
            warnings.warn(
                f"pairs ({source!r},{target!r}) and ({target!r},{source!r}) imply joints"
                f" that disagree by {worst:.3g}",
                InconsistentEstimateWarning,
                stacklevel=3,
            )


@dataclass(frozen=True)
class LeakageReport:
    """Assembled report: priors, scenario posterior tables, leakage profiles
    and the optional budget allocation."""

    attributes: dict[str, dict]
    dependencies: tuple[dict, ...]
    scenario_rows: tuple[dict, ...]
    profiles: dict[str, dict]
    allocation: dict | None
    meta: dict

    def to_dict(self) -> dict:
        return {
            "attributes": self.attributes,
            "dependencies": list(self.dependencies),
            "scenarios": list(self.scenario_rows),
            "leakage_profiles": self.profiles,
            "allocation": self.allocation,
            "meta": self.meta,
        }


def _round12(value):
    if isinstance(value, bool) or not isinstance(value, float):
        return value
    return float(f"{value:.12g}")


def _rounded(obj):
    if isinstance(obj, dict):
        return {key: _rounded(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(item) for item in obj]
    return _round12(obj)


def render_json(report: LeakageReport) -> str:
    """Deterministic JSON rendering: sorted keys, 12 significant digits."""
    return json.dumps(_rounded(report.to_dict()), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_text(header, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            ["" if v is None else (f"{v:.12g}" if isinstance(v, float) else v) for v in row]
        )
    return buffer.getvalue()


def render_csv_tables(report: LeakageReport) -> dict[str, str]:
    """CSV renderings of the report's tables, numerically identical to the JSON."""
    scenario_rows = [
        [r["attribute"], r["target"], r["evidence"], r["n"], r["ratio"], r["posterior"], r["log_ratio"]]
        for r in report.scenario_rows
    ]
    tables = {
        "scenarios": _csv_text(
            ["attribute", "target", "evidence", "n", "ratio", "posterior", "log_ratio"],
            scenario_rows,
        )
    }
    profile_rows = []
    for attr_id, profile in report.profiles.items():
        profile_rows.append([attr_id, attr_id, "self", profile["self_bits"]])
        for term in profile["cross"]:
            profile_rows.append([attr_id, term["target"], "cross", term["bits"]])
        profile_rows.append([attr_id, "", "total", profile["total_bits"]])
    tables["profiles"] = _csv_text(["attribute", "target", "kind", "bits"], profile_rows)
    if report.allocation is not None:
        rows = [[attr_id, eps] for attr_id, eps in report.allocation["epsilons"].items()]
        rows.append(["(objective)", report.allocation["objective"]])
        rows.append(["(achieved_leakage)", report.allocation["achieved_leakage"]])
        tables["allocation"] = _csv_text(["attribute", "epsilon"], rows)
    return tables


def _ratio_row(attribute, target, evidence, n, ratio: PosteriorRatio) -> dict:
    log_value = ratio.log_value
    natural = ratio.value
    return {
        "attribute": attribute,
        "target": target,
        "evidence": evidence,
        "n": n,
        "log_ratio": log_value if math.isfinite(log_value) else None,
        "ratio": natural if math.isfinite(natural) else None,
        "posterior": ratio.posterior,
    }


def _with_context(context: str, exc: OsdprrError):
    return type(exc)(f"{context}: {exc}")


def _parse_rules(policy_config) -> list[PolicyRule]:
    rules = []
    for entry in policy_config or []:
        attribute = entry["attribute"]
        threshold = entry["threshold"]
        if attribute in _TIME_VALUED and isinstance(threshold, str):
            threshold = parse_time_of_day(threshold)
        rules.append(PolicyRule(attribute=attribute, comparator=entry["comparator"], threshold=threshold))
    return rules


def _parse_work_hours(config) -> tuple[time, time]:
    raw = config.get("work_hours")
    if raw is None:
        return DEFAULT_WORK_HOURS
    return (parse_time_of_day(raw[0]), parse_time_of_day(raw[1]))


def _parse_day_split(config) -> time:
    raw = config.get("day_split")
    return DEFAULT_DAY_SPLIT if raw is None else parse_time_of_day(raw)


def resolve_config(config: dict):
    """Resolve a report configuration into model objects.

    Attributes missing ``theta`` and dependencies marked ``"estimate": true``
    are estimated from ``input_csv`` through extraction, labeling and
    smoothing; explicit values are used as given.

    Returns ``(attribute_specs, dependency_pairs, rules, labels, records)``
    where ``labels`` and ``records`` are None when no estimation was needed.
    """
    attrs_config = config.get("attributes") or []
    if not attrs_config:
        raise InvalidParameterError("config must declare at least one attribute")
    deps_config = config.get("dependencies") or []
    rules = _parse_rules(config.get("policy"))

    need_estimation = any("theta" not in entry for entry in attrs_config) or any(
        entry.get("estimate") for entry in deps_config
    )
    labels = None
    records = None
    estimated_thetas: dict[str, float] = {}
    estimated_deps: dict[tuple[str, str], DependencyPair] = {}
    if need_estimation:
        records = _extract_all(config)
        labels = label_sensitivity(records, rules)
        pairs = [
            (entry["source"], entry["target"])
            for entry in deps_config
            if entry.get("estimate")
        ]
        estimated_thetas, deps_list = estimate_parameters(labels, pairs)
        estimated_deps = {(dep.source, dep.target): dep for dep in deps_list}

    attributes = []
    for entry in attrs_config:
        attr_id = entry["id"]
        theta = entry.get("theta")
        if theta is None:
            if attr_id not in estimated_thetas:
                raise InvalidParameterError(
                    f"attribute {attr_id!r} has no theta and no labeled records to estimate one"
                )
            theta = estimated_thetas[attr_id]
        attributes.append(AttributeSpec(id=attr_id, theta=theta, epsilon=entry.get("epsilon", 0.0)))

    known = {attr.id for attr in attributes}
    deps = []
    for entry in deps_config:
        source, target = entry["source"], entry["target"]
        if source not in known or target not in known:
            raise InvalidParameterError(
                f"dependency {source!r}->{target!r} references undeclared attributes"
            )
        if entry.get("estimate"):
            deps.append(estimated_deps[(source, target)])
        else:
            deps.append(
                DependencyPair(
                    source=source,
                    target=target,
                    delta1=entry["delta1"],
                    delta2=entry["delta2"],
                )
            )
    theta_by_id = {attr.id: attr.theta for attr in attributes}
    _warn_mutual_inconsistency(theta_by_id, deps, 0.05)
    return attributes, deps, rules, labels


def _explicit_epsilons(config) -> dict[str, float | None]:
    return {entry["id"]: entry.get("epsilon") for entry in config.get("attributes") or []}


def run_report(config: dict) -> LeakageReport:
    """Evaluate the configured scenarios into a `LeakageReport`.

    Posterior-ratio rows cover each attribute's own suppression (single and
    composed), its own release, each dependency's suppression/release
    evidence, and configured collusion pairs.  Attribute epsilons come from
    the config, or from the budget allocation for attributes that do not pin
    one explicitly.  Deterministic given (config, seed).
    """
    attributes, deps, _rules, _labels = resolve_config(config)
    theta_by_id = {attr.id: attr.theta for attr in attributes}
    scenarios = config.get("scenarios") or {}
    n_composed = int(scenarios.get("n_queries", 1))
    seed = check_seed(int(config.get("seed", 0)))

    allocation: Allocation | None = None
    if config.get("budget") is not None:
        budget = config["budget"]
        problem = BudgetProblem(
            attributes=tuple(attributes),
            leakage_budget=budget["T"],
            deps=tuple(deps),
            epsilon_max=budget.get("epsilon_max", 10.0),
            tol=budget.get("tol", 1e-3),
        )
        allocation = allocate_budget(problem, seed=seed)

    explicit = _explicit_epsilons(config)
    epsilons: dict[str, float] = {}
    for attr in attributes:
        if explicit.get(attr.id) is not None:
            epsilons[attr.id] = float(explicit[attr.id])
        elif allocation is not None:
            epsilons[attr.id] = allocation.epsilons[attr.id]
        else:
            raise InvalidParameterError(
                f"attribute {attr.id!r} has no epsilon and no budget to allocate one"
            )

    ns = sorted({1, n_composed})
    rows = []
    for attr in attributes:
        eps = epsilons[attr.id]
        for n in ns:
            try:
                ratio = posterior_ratio_self(attr.theta, eps, n)
            except OsdprrError as exc:
                raise _with_context(f"attribute {attr.id!r}, self suppression n={n}", exc) from exc
            rows.append(_ratio_row(attr.id, attr.id, "suppressed", n, ratio))
        rows.append(
            _ratio_row(attr.id, attr.id, "released", 1, PosteriorRatio(log_value=-math.inf))
        )
    for dep in deps:
        eps = epsilons[dep.source]
        theta_target = theta_by_id[dep.target]
        for n in ns:
            try:
                ratio = posterior_ratio_cross(
                    theta_target, dep, eps, ReleaseOutcome.SUPPRESSED, n
                )
            except OsdprrError as exc:
                raise _with_context(
                    f"dependency {dep.source!r}->{dep.target!r}, suppression n={n}", exc
                ) from exc
            rows.append(_ratio_row(dep.source, dep.target, "suppressed", n, ratio))
        try:
            ratio = posterior_ratio_cross(theta_target, dep, eps, ReleaseOutcome.RELEASED)
        except OsdprrError as exc:
            raise _with_context(f"dependency {dep.source!r}->{dep.target!r}, release", exc) from exc
        rows.append(_ratio_row(dep.source, dep.target, "released", 1, ratio))

    dep_by_pair = {(dep.source, dep.target): dep for dep in deps}
    for pair in scenarios.get("collusion_pairs") or []:
        source, target = pair
        dep = dep_by_pair.get((source, target))
        if dep is None:
            raise InvalidParameterError(
                f"collusion pair ({source!r}, {target!r}) has no declared dependency"
            )
        for m_i, label in (
            (ReleaseOutcome.SUPPRESSED, "collusion-suppressed-suppressed"),
            (ReleaseOutcome.RELEASED, "collusion-released-suppressed"),
        ):
            try:
                ratio = posterior_ratio_collusion(
                    theta_by_id[target],
                    dep,
                    epsilons[source],
                    epsilons[target],
                    m_i,
                    ReleaseOutcome.SUPPRESSED,
                )
            except OsdprrError as exc:
                raise _with_context(
                    f"collusion ({source!r}, {target!r}), {label}", exc
                ) from exc
            rows.append(_ratio_row(source, target, label, 1, ratio))

    profiles = {}
    for attr in attributes:
        spec = AttributeSpec(id=attr.id, theta=attr.theta, epsilon=epsilons[attr.id])
        dep_list = [(theta_by_id[dep.target], dep) for dep in deps if dep.source == attr.id]
        profile = total_leakage(spec, dep_list)
        profiles[attr.id] = {
            "epsilon": profile.epsilon,
            "self_bits": profile.self_term.bits,
            "cross": [
                {"target": term.target, "bits": term.bits} for term in profile.cross_terms
            ],
            "total_bits": profile.total,
        }

    allocation_dict = None
    if allocation is not None:
        allocation_dict = {
            "epsilons": dict(allocation.epsilons),
            "achieved_leakage": allocation.achieved_leakage,
            "objective": allocation.objective,
            "status": allocation.status,
        }

    return LeakageReport(
        attributes={
            attr.id: {"theta": attr.theta, "epsilon": epsilons[attr.id]} for attr in attributes
        },
        dependencies=tuple(
            {
                "source": dep.source,
                "target": dep.target,
                "delta1": dep.delta1,
                "delta2": dep.delta2,
            }
            for dep in deps
        ),
        scenario_rows=tuple(rows),
        profiles=profiles,
        allocation=allocation_dict,
        meta={"seed": seed, "n_queries": n_composed},
    )


def release_records(config: dict, seed: int | None = None) -> list[dict]:
    """Apply the mechanism to every labeled record of the configured attributes.

    Records are ordered by (space, day) per attribute; each attribute's
    stream uses a seed derived as ``seed XOR (1 + index)`` of its position in
    the sorted attribute list.  Released rows carry the record's value;
    suppressed rows carry nothing.
    """
    attributes, deps, rules, labels = resolve_config(config)
    if labels is None:
        input_csv = config.get("input_csv")
        if input_csv is None:
            raise InvalidParameterError("release needs input_csv records to run the mechanism on")
        records = []
        for trace in ingest_csv(input_csv):
            records.extend(
                extract_attributes(trace, _parse_work_hours(config), _parse_day_split(config))
            )
        labels = label_sensitivity(records, rules)

    if seed is None:
        seed = int(config.get("seed", 0))
    seed = check_seed(seed)

    allocation = None
    explicit = _explicit_epsilons(config)
    if config.get("budget") is not None and any(
        explicit.get(attr.id) is None for attr in attributes
    ):
        budget = config["budget"]
        problem = BudgetProblem(
            attributes=tuple(attributes),
            leakage_budget=budget["T"],
            deps=tuple(deps),
            epsilon_max=budget.get("epsilon_max", 10.0),
            tol=budget.get("tol", 1e-3),
        )
        allocation = allocate_budget(problem, seed=seed)

    rows = []
    ordered = sorted(attr.id for attr in attributes)
    for index, attr_id in enumerate(ordered):
        if explicit.get(attr_id) is not None:
            epsilon = float(explicit[attr_id])
        elif allocation is not None:
            epsilon = allocation.epsilons[attr_id]
        else:
            raise InvalidParameterError(
                f"attribute {attr_id!r} has no epsilon and no budget to allocate one"
            )
        if attr_id not in labels:
            raise InvalidParameterError(
                f"attribute {attr_id!r} is not produced by extraction; cannot release it"
            )
        keys = sorted(labels[attr_id].keys())
        xs = [int(labels[attr_id][key]) for key in keys]
        outcomes = release_stream(xs, epsilon, chunk_seed_for_attr(seed, index))
        for key, x, outcome in zip(keys, xs, outcomes):
            space_id, day = key
            rows.append(
                {
                    "space_id": space_id,
                    "day": day.isoformat(),
                    "attribute": attr_id,
                    "outcome": "released" if outcome == 1 else "suppressed",
                }
            )
    return rows


def chunk_seed_for_attr(seed: int, index: int) -> int:
    """Per-attribute stream seed: ``seed XOR (1 + index)`` in sorted-id order."""
    return seed ^ (1 + index)

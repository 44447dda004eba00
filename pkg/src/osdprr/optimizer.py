"""Privacy-parameter allocation under a total information-leakage budget.

The problem: maximize the summed release parameters subject to the summed
per-attribute leakage staying at or below a budget, with each epsilon in
``[0, epsilon_max]``.  The cap keeps the problem bounded: leakage saturates
below the attribute entropies, so without it any sufficiently large budget
would admit unbounded epsilons.

Because the leakage curves need not be convex or even monotone in epsilon,
`allocate_budget` avoids derivative conditions entirely: it bisects a
Lagrange multiplier where every coordinate subproblem is solved by scanning a
dense epsilon grid, then fills remaining slack coordinate-wise and refines
within one grid step.  `grid_search_oracle` is the independent check, an
exhaustive search over the same kind of grid for up to three attributes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DimensionTooLargeError, InvalidParameterError
from .infoleak import mi_cross, mi_self
from .model import AttributeSpec, DependencyPair

AllocationStatus = Literal["optimal-on-grid", "budget-slack", "budget-zero"]

_FEAS_SLOP = 1e-12


@dataclass(frozen=True)
class BudgetProblem:
    """Inputs of one allocation run.

    Attribute epsilons are outputs here; any epsilon stored on the specs is
    ignored.  Dependencies must reference declared attribute ids; each
    declared pair adds its cross-leakage to its source's curve.
    """

    attributes: tuple[AttributeSpec, ...]
    leakage_budget: float
    deps: tuple[DependencyPair, ...] = ()
    epsilon_max: float = 10.0
    tol: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "deps", tuple(self.deps))
        if not self.attributes:
            raise InvalidParameterError("at least one attribute is required")
        ids = [a.id for a in self.attributes]
        if len(set(ids)) != len(ids):
            raise InvalidParameterError("attribute ids must be unique")
        if not (isinstance(self.leakage_budget, (int, float)) and math.isfinite(self.leakage_budget)
                and self.leakage_budget >= 0.0):
            raise InvalidParameterError(f"leakage budget must be >= 0, got {self.leakage_budget!r}")
        if not (isinstance(self.epsilon_max, (int, float)) and math.isfinite(self.epsilon_max)
                and self.epsilon_max > 0.0):
            raise InvalidParameterError(f"epsilon_max must be positive, got {self.epsilon_max!r}")
        if not (isinstance(self.tol, (int, float)) and math.isfinite(self.tol) and self.tol > 0.0):
            raise InvalidParameterError(f"tol must be positive, got {self.tol!r}")
        known = set(ids)
        for dep in self.deps:
            if dep.source not in known or dep.target not in known:
                raise InvalidParameterError(
                    f"dependency {dep.source!r}->{dep.target!r} references undeclared attributes"
                )


@dataclass(frozen=True)
class Allocation:
    """A feasible assignment of release parameters."""

    epsilons: dict[str, float]
    achieved_leakage: float
    objective: float
    status: AllocationStatus


def _attr_curve(p: BudgetProblem, index: int, eps) -> np.ndarray:
    """Exact leakage of one attribute evaluated at an array of epsilons."""
    attr = p.attributes[index]
    theta = {a.id: a.theta for a in p.attributes}
    total = np.asarray(mi_self(attr.theta, eps), dtype=float)
    for dep in p.deps:
        if dep.source == attr.id:
            total = total + mi_cross(theta[dep.target], dep, eps)
    return total


def _curves(p: BudgetProblem, grid: np.ndarray) -> np.ndarray:
    tables = np.vstack([_attr_curve(p, c, grid) for c in range(len(p.attributes))])
    if grid[0] == 0.0:
        tables[:, 0] = 0.0  # leakage at epsilon 0 is exactly zero
    return tables


def _grid(epsilon_max: float, step: float) -> np.ndarray:
    npts = int(math.ceil(epsilon_max / step - 1e-9)) + 1
    return np.linspace(0.0, epsilon_max, max(npts, 2))


def _allocation(p: BudgetProblem, eps: np.ndarray, achieved: float, status: AllocationStatus) -> Allocation:
    return Allocation(
        epsilons={a.id: float(e) for a, e in zip(p.attributes, eps)},
        achieved_leakage=float(achieved),
        objective=float(eps.sum()),
        status=status,
    )


def _symmetric_groups(tables: np.ndarray) -> list[list[int]]:
    groups: dict[bytes, list[int]] = {}
    for c in range(tables.shape[0]):
        groups.setdefault(tables[c].tobytes(), []).append(c)
    return list(groups.values())


def _lockstep_fill(tables, grid, idxs, groups, budget):
    """Greedy slack fill, one grid step per group per sweep.

    Symmetric groups move together so identical attributes end at identical
    epsilons.
    """
    k = tables.shape[0]
    achieved = float(tables[np.arange(k), idxs].sum())
    npts = grid.size
    improved = True
    while improved:
        improved = False
        for members in groups:
            lo = min(idxs[m] for m in members)
            for m in members:
                if idxs[m] != lo:
                    achieved += float(tables[m, lo] - tables[m, idxs[m]])
                    idxs[m] = lo
            nxt = lo + 1
            if nxt >= npts:
                continue
            delta = float(sum(tables[m, nxt] - tables[m, lo] for m in members))
            if achieved + delta <= budget + _FEAS_SLOP:
                for m in members:
                    idxs[m] = nxt
                achieved += delta
                improved = True
    return idxs, achieved


def _refine(p, tables, grid, idxs, groups, budget):
    """Continuous lockstep refinement within one grid step above each group."""
    k = tables.shape[0]
    step = grid[1] - grid[0]
    eps = grid[idxs].astype(float)
    achieved = float(tables[np.arange(k), idxs].sum())
    for members in groups:
        cur = eps[members[0]]
        hi = min(cur + step, p.epsilon_max)
        if hi <= cur:
            continue
        cur_leak = float(_attr_curve(p, members[0], cur))
        base = achieved - len(members) * cur_leak
        cands = np.linspace(cur, hi, 65)[1:]
        leaks = _attr_curve(p, members[0], cands)
        feasible = np.flatnonzero(base + len(members) * leaks <= budget + _FEAS_SLOP)
        if feasible.size:
            pick = int(feasible.max())
            for m in members:
                eps[m] = cands[pick]
            achieved = base + len(members) * float(leaks[pick])
    achieved = float(sum(float(_attr_curve(p, c, eps[c])) for c in range(k)))
    return eps, achieved


def _polish(p, tables, grid, idxs, budget):
    groups = _symmetric_groups(tables)
    idxs, _ = _lockstep_fill(tables, grid, np.asarray(idxs, dtype=int).copy(), groups, budget)
    return _refine(p, tables, grid, idxs, groups, budget)


def _coordinate_ascent(tables, grid, budget, rng, restarts):
    """Seeded restarted ascent: each coordinate jumps to its best feasible grid
    point given the others, in a shuffled order, until a fixed point."""
    k, npts = tables.shape
    best = np.zeros(k, dtype=int)
    best_obj = -math.inf
    for _ in range(restarts):
        idxs = np.zeros(k, dtype=int)
        achieved = 0.0
        for _sweep in range(64):
            changed = False
            for c in rng.permutation(k):
                headroom = budget - (achieved - float(tables[c, idxs[c]]))
                feasible = np.flatnonzero(tables[c] <= headroom + _FEAS_SLOP)
                pick = int(feasible.max())
                if pick != idxs[c]:
                    achieved += float(tables[c, pick] - tables[c, idxs[c]])
                    idxs[c] = pick
                    changed = True
            if not changed:
                break
        obj = float(grid[idxs].sum())
        if obj > best_obj:
            best_obj, best = obj, idxs.copy()
    return best


def allocate_budget(p: BudgetProblem, seed: int = 0) -> Allocation:
    """Allocate release parameters by Lagrangian bisection with grid scans.

    The coordinate subproblems ``max (eps - lambda * leakage(eps))`` are
    solved by scanning a grid with spacing at most ``p.tol`` (ties break
    toward the smaller epsilon), the multiplier is bisected to the smallest
    feasible value, leftover budget is filled greedily and refined within one
    grid step.  If the complementary-slackness residual afterwards still
    exceeds ``p.tol`` (possible because the curves may be nonconvex), the
    result is cross-checked against the exhaustive grid oracle for up to
    three attributes and against seeded restarted coordinate ascent beyond
    that, keeping the better objective.

    Identical attributes always receive identical epsilons.
    """
    k = len(p.attributes)
    budget = float(p.leakage_budget)
    if budget == 0.0:
        eps = np.zeros(k)
        return _allocation(p, eps, 0.0, "budget-zero")

    step = min(p.tol, p.epsilon_max / 1000.0)
    grid = _grid(p.epsilon_max, step)
    tables = _curves(p, grid)
    arange = np.arange(k)

    cap_total = float(tables[:, -1].sum())
    if cap_total <= budget:
        eps = np.full(k, p.epsilon_max)
        return _allocation(p, eps, cap_total, "budget-slack")

    def solve(lam: float):
        idxs = np.argmax(grid[None, :] - lam * tables, axis=1)
        return idxs, float(tables[arange, idxs].sum())

    lam_hi = 1.0
    idxs_hi, total_hi = solve(lam_hi)
    for _ in range(200):
        if total_hi <= budget:
            break
        lam_hi *= 2.0
        idxs_hi, total_hi = solve(lam_hi)
    lam_lo = 0.0
    for _ in range(100):
        lam_mid = 0.5 * (lam_lo + lam_hi)
        idxs_mid, total_mid = solve(lam_mid)
        if total_mid <= budget:
            lam_hi, idxs_hi, total_hi = lam_mid, idxs_mid, total_mid
        else:
            lam_lo = lam_mid

    # Weak duality: the grid optimum exceeds the bisection solution by at most
    # lambda * slack, so a small residual certifies near-optimality even for
    # nonconvex curves.
    residual = lam_hi * (budget - total_hi)
    eps, achieved = _polish(p, tables, grid, idxs_hi, budget)
    objective = float(eps.sum())

    if residual > p.tol:
        if k <= 3:
            alt_idxs, _, _ = _oracle_best(tables, grid, budget)
        else:
            rng = np.random.default_rng(seed)
            alt_idxs = _coordinate_ascent(tables, grid, budget, rng, restarts=8)
        alt_eps, alt_achieved = _polish(p, tables, grid, alt_idxs, budget)
        if float(alt_eps.sum()) > objective:
            eps, achieved, objective = alt_eps, alt_achieved, float(alt_eps.sum())

    return _allocation(p, eps, achieved, "optimal-on-grid")


def _staircase(values: np.ndarray, grid: np.ndarray):
    """Sorted leakage values with, for each prefix, the best epsilon and its index."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    best_eps = grid[order].copy()
    best_idx = order.copy()
    for t in range(1, order.size):
        if best_eps[t] < best_eps[t - 1]:
            best_eps[t] = best_eps[t - 1]
            best_idx[t] = best_idx[t - 1]
    return sorted_vals, best_eps, best_idx


def _oracle_best(tables: np.ndarray, grid: np.ndarray, budget: float):
    """Exhaustive-grid optimum, restructured so the inner coordinate is read
    off a Pareto staircase instead of re-scanned; the optimum is identical to
    the nested-loop scan."""
    k, npts = tables.shape
    if k == 1:
        feasible = np.flatnonzero(tables[0] <= budget + _FEAS_SLOP)
        best = int(feasible.max())
        return np.array([best]), float(grid[best]), float(tables[0, best])

    sorted_vals, best_eps, best_idx = _staircase(tables[-1], grid)

    def last_coord(headroom: np.ndarray):
        pos = np.searchsorted(sorted_vals, headroom + _FEAS_SLOP, side="right") - 1
        return pos

    best_obj = -math.inf
    best_combo = None
    if k == 2:
        headroom = budget - tables[0]
        pos = last_coord(headroom)
        valid = pos >= 0
        if valid.any():
            objs = np.where(valid, grid + best_eps[np.clip(pos, 0, None)], -math.inf)
            i0 = int(np.argmax(objs))
            best_obj = float(objs[i0])
            best_combo = (i0, int(best_idx[pos[i0]]))
    else:
        for i0 in range(npts):
            b0 = budget - tables[0, i0]
            if b0 < -_FEAS_SLOP:
                continue
            headroom = b0 - tables[1]
            pos = last_coord(headroom)
            valid = pos >= 0
            if not valid.any():
                continue
            objs = np.where(valid, grid + best_eps[np.clip(pos, 0, None)], -math.inf)
            i1 = int(np.argmax(objs))
            obj = float(grid[i0] + objs[i1])
            if obj > best_obj:
                best_obj = obj
                best_combo = (i0, i1, int(best_idx[pos[i1]]))

    idxs = np.array(best_combo, dtype=int)
    achieved = float(tables[np.arange(k), idxs].sum())
    return idxs, best_obj, achieved


def grid_search_oracle(p: BudgetProblem, step: float) -> Allocation:
    """Best feasible point of the exhaustive epsilon grid (up to 3 attributes)."""
    k = len(p.attributes)
    if k > 3:
        raise DimensionTooLargeError(f"grid search over {k} attributes is too expensive; max is 3")
    if not (isinstance(step, (int, float)) and math.isfinite(step) and step > 0.0):
        raise InvalidParameterError(f"step must be positive, got {step!r}")
    budget = float(p.leakage_budget)
    if budget == 0.0:
        return _allocation(p, np.zeros(k), 0.0, "budget-zero")
    grid = _grid(p.epsilon_max, step)
    tables = _curves(p, grid)
    cap_total = float(tables[:, -1].sum())
    if cap_total <= budget:
        return _allocation(p, np.full(k, p.epsilon_max), cap_total, "budget-slack")
    idxs, _, achieved = _oracle_best(tables, grid, budget)
    return _allocation(p, grid[idxs], achieved, "optimal-on-grid")


def _oracle_bruteforce(p: BudgetProblem, step: float) -> Allocation:
    """Literal nested-loop scan; validation twin of `grid_search_oracle`."""
    k = len(p.attributes)
    budget = float(p.leakage_budget)
    grid = _grid(p.epsilon_max, step)
    if grid.size ** k > 2_000_000:
        raise DimensionTooLargeError("brute-force grid too large; use grid_search_oracle")
    tables = _curves(p, grid)
    if budget == 0.0:
        return _allocation(p, np.zeros(k), 0.0, "budget-zero")
    best_obj = -math.inf
    best = None
    for combo in itertools.product(range(grid.size), repeat=k):
        leak = sum(tables[c, i] for c, i in enumerate(combo))
        if leak > budget + _FEAS_SLOP:
            continue
        obj = sum(grid[i] for i in combo)
        if obj > best_obj:
            best_obj = obj
            best = combo
    idxs = np.array(best, dtype=int)
    achieved = float(tables[np.arange(k), idxs].sum())
    status = "budget-slack" if bool((idxs == grid.size - 1).all()) else "optimal-on-grid"
    return _allocation(p, grid[idxs], achieved, status)

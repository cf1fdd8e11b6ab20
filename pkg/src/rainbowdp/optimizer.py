"""Choose (l, c) minimizing the tradeoff coefficient for a budget and success target."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import theory
from .theory import TheoryInputs

C_MIN, C_MAX, C_STEP = 0.05, 4.0, 0.01
P_TOL = 1e-4


@dataclass
class OptimizationResult:
    l: int
    c: float
    achieved_p: float
    D_pc: float
    D_tcr: float
    feasible: bool
    target_p: float = math.nan
    candidates: list["OptimizationResult"] = field(default_factory=list, repr=False)
    # set by optimize_grid: a smaller budget reaches the same target with a lower D_tcr
    dominated: bool = False


def achieved_success(l: int, c: float, d_pc: float) -> float:
    if d_pc <= 0:
        return 0.0
    return theory.success_prob(TheoryInputs.from_coefficients(l, c, d_pc))


def tradeoff(l: int, c: float, d_pc: float) -> float:
    return theory.tradeoff_coefficient(TheoryInputs.from_coefficients(l, c, d_pc))


def c_grid() -> np.ndarray:
    n = int(round((C_MAX - C_MIN) / C_STEP))
    return np.round(C_MIN + C_STEP * np.arange(n + 1), 10)


def _bisect(fn, lo, hi, flo):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if abs(fm) <= P_TOL * 1e-3 or hi - lo < 1e-12:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def c_roots(l: int, d_pc: float, target_p: float) -> list[float]:
    """Every c in the scan range where the success probability crosses the target."""
    def gap(c):
        return achieved_success(l, c, d_pc) - target_p

    grid = c_grid()
    vals = [gap(c) for c in grid]
    roots = []
    for k in range(len(grid) - 1):
        a, b = vals[k], vals[k + 1]
        if a == 0.0:
            roots.append(float(grid[k]))
        elif (a < 0) != (b < 0) and b != 0.0:
            roots.append(_bisect(gap, float(grid[k]), float(grid[k + 1]), a))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def solve_c(l: int, d_pc: float, target_p: float) -> float | None:
    """The chain-length ratio reaching ``target_p`` with least D_tcr, or None."""
    if not 0 < target_p < 1:
        raise ValueError("target success probability must be in (0, 1)")
    roots = [c for c in c_roots(l, d_pc, target_p) if abs(achieved_success(l, c, d_pc) - target_p) <= P_TOL]
    if not roots:
        return None
    return min(roots, key=lambda c: tradeoff(l, c, d_pc))


def evaluate_l(l: int, d_pc: float, target_p: float) -> OptimizationResult:
    c = solve_c(l, d_pc, target_p)
    if c is None:
        return OptimizationResult(l, math.nan, math.nan, d_pc, math.inf, False, target_p)
    return OptimizationResult(l, c, achieved_success(l, c, d_pc), d_pc, tradeoff(l, c, d_pc), True, target_p)


def optimize(d_pc: float, target_p: float, l_max: int = 8) -> OptimizationResult:
    """Best (l, c) over l = 1..l_max; ``candidates`` lists every l."""
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    cands = [evaluate_l(l, d_pc, target_p) for l in range(1, l_max + 1)]
    ok = [r for r in cands if r.feasible]
    if not ok:
        return OptimizationResult(0, math.nan, math.nan, d_pc, math.inf, False, target_p, cands)
    best = min(ok, key=lambda r: r.D_tcr)
    return OptimizationResult(best.l, best.c, best.achieved_p, d_pc, best.D_tcr, True, target_p, cands)


def optimize_grid(d_pc_values, targets, l_max: int = 8) -> list[OptimizationResult]:
    """Optimum for every (budget, target); flags optima beaten by a smaller budget."""
    out = []
    best_so_far: dict[float, float] = {}
    for d in sorted(d_pc_values):
        for p in targets:
            r = optimize(d, p, l_max)
            prev = best_so_far.get(p, math.inf)
            r.dominated = r.feasible and r.D_tcr > prev
            if r.feasible:
                best_so_far[p] = min(prev, r.D_tcr)
            out.append(r)
    return out

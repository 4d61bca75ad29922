"""Search of the four-angle space for the maximal CHSH value at fixed r.

The objective is the exact analytic S, so no noisy-optimization machinery
is needed.  S has period 180 degrees in every angle (it depends on the
doubled relative angles) and is invariant under a common rotation, so the
grid fixes theta_a = 0 and scans the other three over [0, 180).  A
derivative-free coordinate refinement follows; gradient methods are
avoided because the absolute values make S non-smooth at sign changes.

Numerical experiments across this module's tests support max_angles S =
sqrt(2) + |r|, attained (for r >= 0) at the standard angles up to symmetry
and, for r < 0, at their image under theta_c -> theta_c + 90.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParameterError
from .estimators import AngleSet, analytic_chsh
from .noise import validate_correlation


@dataclass(frozen=True)
class OptimizationResult:
    """Best angle set found, its S value, and the search effort."""

    best_angles: AngleSet
    best_s: float
    evaluations: int
    trace: Optional[tuple] = None  # ((AngleSet, s), ...) improvement steps


def _pair_e(delta_deg, r):
    return 0.5 * np.cos(np.deg2rad(2.0 * delta_deg)) + 0.5 * r


def grid_search(r, step, include_trace=False) -> OptimizationResult:
    """Exhaustive lattice scan with theta_a fixed at 0.

    theta_b, theta_c, theta_d run over {0, step, ..., <180}.  Ties go to the
    lexicographically smallest (theta_b, theta_c, theta_d) tuple.  The
    winner is re-evaluated through ``analytic_chsh`` so the reported best_s
    is exactly what a scalar recomputation yields.
    """
    r = validate_correlation(r)
    step = float(step)
    if not 0.0 < step <= 45.0:
        raise InvalidParameterError("step must lie in (0, 45] degrees")
    values = np.arange(0.0, 180.0, step)
    m = len(values)

    tc = values[:, None]
    td = values[None, :]
    e_ad = _pair_e(-values, r)  # indexed by theta_d
    e_cd = _pair_e(tc - td, r)  # indexed by (theta_c, theta_d)

    best_s = -np.inf
    best_idx = None
    trace = [] if include_trace else None
    # slab per theta_b keeps memory O(m^2) and preserves lexicographic order
    for ib, theta_b in enumerate(values):
        e_ab = _pair_e(0.0 - theta_b, r)
        e_cb = _pair_e(values - theta_b, r)  # indexed by theta_c
        slab = np.abs(e_ab - e_ad)[None, :] + np.abs(e_cb[:, None] + e_cd)
        flat = slab.ravel()
        if include_trace:
            for i in np.flatnonzero(flat > best_s):
                if flat[i] > best_s:
                    best_s = float(flat[i])
                    best_idx = (ib, int(i) // m, int(i) % m)
                    trace.append(
                        (_lattice_angles(values, best_idx), best_s)
                    )
        else:
            i = int(np.argmax(flat))
            if flat[i] > best_s:
                best_s = float(flat[i])
                best_idx = (ib, i // m, i % m)

    best_angles = _lattice_angles(values, best_idx)
    best_s = analytic_chsh(best_angles, r).s_value
    if include_trace:
        trace = tuple((a, analytic_chsh(a, r).s_value) for a, _ in trace)
    return OptimizationResult(
        best_angles=best_angles,
        best_s=best_s,
        evaluations=m**3,
        trace=trace,
    )


def _lattice_angles(values, idx):
    ib, ic, id_ = idx
    return AngleSet(0.0, float(values[ib]), float(values[ic]), float(values[id_]))


def refine(
    r,
    start: AngleSet,
    tolerance=1e-9,
    *,
    initial_step=5.0,
    min_step=1e-4,
    max_cycles=200,
    include_trace=False,
) -> OptimizationResult:
    """Coordinate-wise shrinking-bracket local search from a starting point.

    Cycles over the four angles; for each, candidate moves of +-h are tried
    with h halving from initial_step down to min_step, keeping any strict
    improvement.  Stops when a full cycle improves S by at most
    ``tolerance``.  The incumbent S never decreases.
    """
    r = validate_correlation(r)
    if not tolerance > 0.0:
        raise InvalidParameterError("tolerance must be positive")
    if not 0.0 < min_step <= initial_step:
        raise InvalidParameterError("need 0 < min_step <= initial_step")

    angles = list(start.as_tuple())
    best_s = analytic_chsh(AngleSet(*angles), r).s_value
    evaluations = 1
    trace = [] if include_trace else None

    for _ in range(max_cycles):
        cycle_start = best_s
        for k in range(4):
            h = initial_step
            while h >= min_step:
                moved = False
                for delta in (h, -h):
                    candidate = angles.copy()
                    candidate[k] = candidate[k] + delta
                    cand_set = AngleSet(*candidate)
                    s = analytic_chsh(cand_set, r).s_value
                    evaluations += 1
                    if s > best_s:
                        best_s = s
                        angles = list(cand_set.as_tuple())
                        moved = True
                        if include_trace:
                            trace.append((cand_set, s))
                        break
                if not moved:
                    h *= 0.5
        if best_s - cycle_start <= tolerance:
            break

    return OptimizationResult(
        best_angles=AngleSet(*angles),
        best_s=best_s,
        evaluations=evaluations,
        trace=tuple(trace) if include_trace else None,
    )


def optimize_angles(r, grid_step=7.5, tolerance=1e-9, include_trace=False) -> OptimizationResult:
    """Grid scan followed by local refinement of the winner."""
    coarse = grid_search(r, grid_step, include_trace=include_trace)
    fine = refine(
        r,
        coarse.best_angles,
        tolerance,
        initial_step=float(grid_step),
        include_trace=include_trace,
    )
    trace = None
    if include_trace:
        trace = tuple(list(coarse.trace) + list(fine.trace))
    return OptimizationResult(
        best_angles=fine.best_angles,
        best_s=fine.best_s,
        evaluations=coarse.evaluations + fine.evaluations,
        trace=trace,
    )

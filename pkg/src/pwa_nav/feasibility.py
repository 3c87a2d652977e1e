"""Feasibility of mixed strict/non-strict linear inequality systems over a
box-constrained control variable.

Strict inequalities are certified by slack maximization: the system is
feasible iff the maximal common slack of the strict rows exceeds TOL_STRICT,
and the achieved slack doubles as a robustness margin.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linprog

TOL_STRICT = 1e-7
DELTA_CAP = 1e6
# Tight solver tolerances so witnesses satisfy the rows to ~1e-10, well below
# TOL_STRICT; the defaults (1e-7) would blur the strictness threshold.
_LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


class Relation(Enum):
    STRICT_GREATER = "strict_greater"  # coeffs . u >  rhs
    NONSTRICT_LEQ = "nonstrict_leq"    # coeffs . u <= rhs


@dataclass(frozen=True)
class Row:
    coeffs: tuple[float, ...]
    rhs: float
    relation: Relation


@dataclass
class LinearConstraintSystem:
    dim: int
    rows: list[Row]
    box: np.ndarray  # (dim, 2) [lo, hi]

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float)
        if self.box.shape != (self.dim, 2):
            raise ValueError("box must be (dim, 2)")
        if np.any(self.box[:, 0] > self.box[:, 1]):
            raise ValueError("empty control box")
        for r in self.rows:
            if len(r.coeffs) != self.dim:
                raise ValueError("row coefficient length mismatch")


@dataclass
class FeasibilityResult:
    feasible: bool
    witness: np.ndarray | None
    margin: float


def strict_greater(coeffs, rhs) -> Row:
    return Row(tuple(float(c) for c in coeffs), float(rhs), Relation.STRICT_GREATER)


def nonstrict_leq(coeffs, rhs) -> Row:
    return Row(tuple(float(c) for c in coeffs), float(rhs), Relation.NONSTRICT_LEQ)


def decide_feasibility(sys: LinearConstraintSystem) -> FeasibilityResult:
    """Maximize the common slack d of the strict rows:

        max d  s.t.  a.u >= rhs + d   (strict rows)
                     a.u <= rhs       (non-strict rows)
                     u in box, 0 <= d <= DELTA_CAP

    Feasible iff d* > TOL_STRICT. Without strict rows this degenerates to a
    plain feasibility check with margin DELTA_CAP.
    """
    m = sys.dim
    strict = [r for r in sys.rows if r.relation is Relation.STRICT_GREATER]
    nonstrict = [r for r in sys.rows if r.relation is Relation.NONSTRICT_LEQ]
    bounds = [(sys.box[k, 0], sys.box[k, 1]) for k in range(m)]

    a_ub, b_ub = [], []
    for r in nonstrict:
        a_ub.append(list(r.coeffs) + ([0.0] if strict else []))
        b_ub.append(r.rhs)

    if not strict:
        c = np.zeros(m)
        res = linprog(c, A_ub=np.array(a_ub) if a_ub else None,
                      b_ub=np.array(b_ub) if b_ub else None,
                      bounds=bounds, method="highs", options=_LP_OPTIONS)
        if res.status != 0:
            return FeasibilityResult(False, None, 0.0)
        return FeasibilityResult(True, np.asarray(res.x), DELTA_CAP)

    for r in strict:
        # -a.u + d <= -rhs
        a_ub.append([-c for c in r.coeffs] + [1.0])
        b_ub.append(-r.rhs)
    c = np.zeros(m + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                  bounds=bounds + [(0.0, DELTA_CAP)], method="highs", options=_LP_OPTIONS)
    if res.status != 0:
        return FeasibilityResult(False, None, 0.0)
    delta = float(res.x[-1])
    if delta <= TOL_STRICT:
        return FeasibilityResult(False, None, delta)
    return FeasibilityResult(True, np.asarray(res.x[:m]), delta)


def balance_witness(sys: LinearConstraintSystem) -> FeasibilityResult:
    """Maximize a uniform slack over all rows:

        max d  s.t.  a.u >= rhs + d   (strict rows)
                     a.u <= rhs - d   (non-strict rows)
                     u in box, 0 <= d <= DELTA_CAP

    A slack-maximal witness from decide_feasibility often sits on active
    non-strict rows, where any model error flips the inequality; the balanced
    witness buys margin on every row at once. Infeasible (or margin below
    TOL_STRICT) whenever some non-strict row is necessarily tight — callers
    should then fall back to the plain witness.

    Since d = 0 relaxes every row to its non-strict form, an LP that is
    infeasible outright (reported with margin -1.0) certifies that the
    original system is empty too, sparing callers the fallback solve.
    """
    m = sys.dim
    bounds = [(sys.box[k, 0], sys.box[k, 1]) for k in range(m)]
    a_ub, b_ub = [], []
    for r in sys.rows:
        if r.relation is Relation.STRICT_GREATER:
            a_ub.append([-c for c in r.coeffs] + [1.0])
            b_ub.append(-r.rhs)
        else:
            a_ub.append(list(r.coeffs) + [1.0])
            b_ub.append(r.rhs)
    if not a_ub:
        return decide_feasibility(sys)
    c = np.zeros(m + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                  bounds=bounds + [(0.0, DELTA_CAP)], method="highs", options=_LP_OPTIONS)
    if res.status != 0:
        return FeasibilityResult(False, None, -1.0)
    delta = float(res.x[-1])
    if delta <= TOL_STRICT:
        return FeasibilityResult(False, None, delta)
    return FeasibilityResult(True, np.asarray(res.x[:m]), delta)


def balance_witnesses_batch(
    systems: list[LinearConstraintSystem],
) -> list[FeasibilityResult] | None:
    """Solve the balance LP of several independent systems in one call.

    The blocks share no variables, so stacking them block-diagonally and
    maximizing the sum of the per-block slacks optimizes each block
    individually while paying the solver-call overhead once. Returns None
    when the combined LP is infeasible, i.e. some block is empty even with
    every row relaxed to non-strict; otherwise one per-block result with the
    same semantics as balance_witness.
    """
    if not systems:
        return []
    offsets = np.cumsum([0] + [sys.dim for sys in systems])
    n_u = int(offsets[-1])
    k = len(systems)
    n_var = n_u + k  # block inputs, then one slack per block
    n_rows = sum(len(sys.rows) for sys in systems)
    a_ub = np.zeros((n_rows, n_var))
    b_ub = np.empty(n_rows)
    bounds: list[tuple[float, float]] = []
    row = 0
    for i, sys in enumerate(systems):
        off = offsets[i]
        bounds.extend((sys.box[j, 0], sys.box[j, 1]) for j in range(sys.dim))
        for r in sys.rows:
            if r.relation is Relation.STRICT_GREATER:
                a_ub[row, off:off + sys.dim] = [-c for c in r.coeffs]
            else:
                a_ub[row, off:off + sys.dim] = r.coeffs
            a_ub[row, n_u + i] = 1.0
            b_ub[row] = -r.rhs if r.relation is Relation.STRICT_GREATER else r.rhs
            row += 1
    bounds.extend([(0.0, DELTA_CAP)] * k)
    c = np.zeros(n_var)
    c[n_u:] = -1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs",
                  options=_LP_OPTIONS)
    if res.status != 0:
        return None
    out = []
    for i, sys in enumerate(systems):
        delta = float(res.x[n_u + i])
        u = np.asarray(res.x[offsets[i]:offsets[i] + sys.dim])
        if not sys.rows:
            out.append(FeasibilityResult(True, u, DELTA_CAP))
        elif delta <= TOL_STRICT:
            out.append(FeasibilityResult(False, None, delta))
        else:
            out.append(FeasibilityResult(True, u, delta))
    return out


def screen_feasibility(sys: LinearConstraintSystem) -> FeasibilityResult | None:
    """Cheap interval-arithmetic screen, exact-consistent with the LP verdict
    threshold. Returns None when inconclusive.

    Single-variable rows are folded into the box first; then either some row
    is unsatisfiable over the folded box (infeasible) or the folded-box
    center satisfies every row with slack above TOL_STRICT (feasible).
    """
    lo = sys.box[:, 0].copy()
    hi = sys.box[:, 1].copy()
    general = []
    for r in sys.rows:
        a = np.asarray(r.coeffs)
        nz = np.nonzero(a)[0]
        if len(nz) == 0:
            # constant row: satisfiable iff 0 > rhs (strict) / 0 <= rhs
            if r.relation is Relation.STRICT_GREATER:
                if 0.0 <= r.rhs + TOL_STRICT:
                    return FeasibilityResult(False, None, 0.0)
            elif r.rhs < 0.0:
                return FeasibilityResult(False, None, 0.0)
            continue
        if len(nz) == 1:
            k = nz[0]
            bound = r.rhs / a[k]
            if r.relation is Relation.STRICT_GREATER:
                if a[k] > 0:
                    lo[k] = max(lo[k], bound)
                else:
                    hi[k] = min(hi[k], bound)
            else:
                if a[k] > 0:
                    hi[k] = min(hi[k], bound)
                else:
                    lo[k] = max(lo[k], bound)
        general.append(r)
    if np.any(lo > hi):
        return FeasibilityResult(False, None, 0.0)

    # Row-wise interval bounds over the folded box.
    for r in general:
        a = np.asarray(r.coeffs)
        hi_val = float(np.sum(np.maximum(a * lo, a * hi)))
        if r.relation is Relation.STRICT_GREATER:
            if hi_val <= r.rhs + TOL_STRICT:
                return FeasibilityResult(False, None, 0.0)
        else:
            lo_val = float(np.sum(np.minimum(a * lo, a * hi)))
            if lo_val > r.rhs:
                return FeasibilityResult(False, None, 0.0)

    center = 0.5 * (lo + hi)
    margin = DELTA_CAP
    for r in sys.rows:
        val = float(np.dot(r.coeffs, center))
        if r.relation is Relation.STRICT_GREATER:
            slack = val - r.rhs
            if slack <= TOL_STRICT:
                return None
            margin = min(margin, slack)
        elif val > r.rhs:
            return None
    return FeasibilityResult(True, center, margin)


def decide_with_screen(sys: LinearConstraintSystem) -> FeasibilityResult:
    """Screen first, exact LP on the ambiguous remainder."""
    out = screen_feasibility(sys)
    if out is not None:
        return out
    return decide_feasibility(sys)

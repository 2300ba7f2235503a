"""Exact two-phase simplex over the rationals, on sparse tableaus.

Built for the L1 chain-filling relaxations: equality constraints with
very sparse integer data and small coefficients.  All arithmetic is
Fraction-exact; Dantzig pricing with a Bland fallback guards against
cycling.  Deterministic: identical inputs pivot identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

OPTIMAL = "OPTIMAL"
INFEASIBLE = "INFEASIBLE"
UNBOUNDED = "UNBOUNDED"
PIVOT_LIMIT = "PIVOT_LIMIT"

_BLAND_TRIGGER = 40  # consecutive degenerate pivots before switching rule


@dataclass
class LpResult:
    status: str
    objective: Optional[Fraction]
    x: dict[int, Fraction]
    pivots: int


class _Tableau:
    """Row-sparse simplex tableau with an explicit objective row."""

    def __init__(self, columns: list[dict[int, int]], b: list, m: int, n: int):
        # constraint rows include one artificial column each: ids n..n+m-1
        self.m = m
        self.n = n
        self.total = n + m
        self.rows: list[dict[int, Fraction]] = [dict() for _ in range(m)]
        self.rhs: list[Fraction] = [Fraction(0)] * m
        self.col_rows: list[set[int]] = [set() for _ in range(self.total)]
        for j, col in enumerate(columns):
            for i, v in col.items():
                self.rows[i][j] = Fraction(v)
                self.col_rows[j].add(i)
        for i in range(m):
            bi = Fraction(b[i])
            if bi < 0:
                self.rhs[i] = -bi
                row = self.rows[i]
                for j in list(row):
                    row[j] = -row[j]
            else:
                self.rhs[i] = bi
            art = self.n + i
            self.rows[i][art] = Fraction(1)
            self.col_rows[art].add(i)
        self.basis = [self.n + i for i in range(m)]
        self.in_basis = [False] * self.total
        for j in self.basis:
            self.in_basis[j] = True
        self.obj: dict[int, Fraction] = {}
        self.obj_const = Fraction(0)

    def set_phase1_objective(self):
        # minimize sum of artificials; reduced costs: c_j - sum over rows
        obj: dict[int, Fraction] = {}
        const = Fraction(0)
        for i in range(self.m):
            const += self.rhs[i]
            for j, v in self.rows[i].items():
                if not self.in_basis[j]:
                    obj[j] = obj.get(j, Fraction(0)) - v
        self.obj = {j: v for j, v in obj.items() if v}
        self.obj_const = const

    def set_phase2_objective(self, c: list):
        obj: dict[int, Fraction] = {}
        const = Fraction(0)
        cb = {}
        for i, j in enumerate(self.basis):
            cj = Fraction(c[j]) if j < self.n else Fraction(0)
            if cj:
                cb[i] = cj
        for j in range(self.n):
            if not self.in_basis[j]:
                cj = Fraction(c[j])
                if cj:
                    obj[j] = cj
        for i, cji in cb.items():
            const += cji * self.rhs[i]
            for j, v in self.rows[i].items():
                if not self.in_basis[j]:
                    obj[j] = obj.get(j, Fraction(0)) - cji * v
        self.obj = {j: v for j, v in obj.items() if v}
        self.obj_const = const

    def pivot(self, enter: int, leave_row: int):
        row = self.rows[leave_row]
        piv = row[enter]
        if piv != 1:
            inv = Fraction(1) / piv
            for j in list(row):
                row[j] *= inv
            self.rhs[leave_row] *= inv
        piv_cols = list(row.keys())
        for i in list(self.col_rows[enter]):
            if i == leave_row:
                continue
            target = self.rows[i]
            f = target.get(enter)
            if not f:
                self.col_rows[enter].discard(i)
                continue
            for j in piv_cols:
                w = target.get(j, Fraction(0)) - f * row[j]
                if w:
                    target[j] = w
                    self.col_rows[j].add(i)
                else:
                    if j in target:
                        del target[j]
                    self.col_rows[j].discard(i)
            self.rhs[i] -= f * self.rhs[leave_row]
        f = self.obj.get(enter)
        if f:
            for j in piv_cols:
                w = self.obj.get(j, Fraction(0)) - f * row[j]
                if w:
                    self.obj[j] = w
                else:
                    self.obj.pop(j, None)
            self.obj_const += f * self.rhs[leave_row]
        old = self.basis[leave_row]
        self.in_basis[old] = False
        self.basis[leave_row] = enter
        self.in_basis[enter] = True
        self.obj.pop(enter, None)

    def choose_entering(self, bland: bool, forbidden) -> Optional[int]:
        best = None
        best_val = Fraction(0)
        for j, v in self.obj.items():
            if v >= 0 or (forbidden and j in forbidden):
                continue
            if bland:
                if best is None or j < best:
                    best = j
            else:
                if v < best_val or (v == best_val and (best is None or j < best)):
                    best = j
                    best_val = v
        return best

    def choose_leaving(self, enter: int) -> Optional[int]:
        best_row = None
        best_ratio = None
        for i in self.col_rows[enter]:
            a = self.rows[i].get(enter)
            if not a or a <= 0:
                continue
            ratio = self.rhs[i] / a
            if (best_ratio is None or ratio < best_ratio
                    or (ratio == best_ratio and self.basis[i] < self.basis[best_row])):
                best_ratio = ratio
                best_row = i
        return best_row

    def optimize(self, max_pivots: int, forbidden=None) -> tuple[str, int]:
        pivots = 0
        degenerate_run = 0
        while True:
            bland = degenerate_run >= _BLAND_TRIGGER
            enter = self.choose_entering(bland, forbidden)
            if enter is None:
                return OPTIMAL, pivots
            leave = self.choose_leaving(enter)
            if leave is None:
                return UNBOUNDED, pivots
            was_degenerate = self.rhs[leave] == 0
            self.pivot(enter, leave)
            pivots += 1
            degenerate_run = degenerate_run + 1 if was_degenerate else 0
            if pivots >= max_pivots:
                return PIVOT_LIMIT, pivots


def solve_lp(columns: list[dict[int, int]], b: list, c: list,
             max_pivots: int = 200_000) -> LpResult:
    """min c.x subject to A x = b, x >= 0, with A given column-wise.

    Exact rational arithmetic throughout.  Returns the optimal basic
    solution (sparse, Fractions) or INFEASIBLE/UNBOUNDED/PIVOT_LIMIT.
    """
    n = len(columns)
    m = len(b)
    t = _Tableau(columns, b, m, n)
    t.set_phase1_objective()
    status, p1 = t.optimize(max_pivots)
    if status == PIVOT_LIMIT:
        return LpResult(PIVOT_LIMIT, None, {}, p1)
    if status == UNBOUNDED:
        raise AssertionError("phase 1 cannot be unbounded")
    if t.obj_const != 0:
        return LpResult(INFEASIBLE, None, {}, p1)
    # drive any artificial still basic (at zero) out of the basis; rows
    # whose artificial cannot leave are redundant constraints and are
    # removed outright so they cannot disturb phase 2
    artificials = set(range(n, n + m))
    redundant = []
    for i in range(m):
        if t.basis[i] in artificials:
            row = t.rows[i]
            enter = min((j for j in row if j < n and row[j] != 0), default=None)
            if enter is not None:
                t.pivot(enter, i)
            else:
                redundant.append(i)
    for i in redundant:
        for j in list(t.rows[i]):
            t.col_rows[j].discard(i)
        t.rows[i] = {}
        t.rhs[i] = Fraction(0)
    t.set_phase2_objective(c)
    status, p2 = t.optimize(max_pivots - p1, forbidden=artificials)
    if status == PIVOT_LIMIT:
        return LpResult(PIVOT_LIMIT, None, {}, p1 + p2)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, None, {}, p1 + p2)
    x: dict[int, Fraction] = {}
    for i, j in enumerate(t.basis):
        if j < n and t.rhs[i]:
            x[j] = t.rhs[i]
    return LpResult(OPTIMAL, t.obj_const, x, p1 + p2)

"""Integer chains, sparse integer matrices, exact kernel computation and
exact linear solving.

Everything here is exact: integer arithmetic wherever a unit pivot is
available (the common case for boundary matrices, whose entries are all
+-1), exact rationals otherwise.  No floating point touches any certified
value.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Optional


class NonUniqueSolutionError(ValueError):
    """The kernel is nontrivial; the caller must use the ILP path."""


class NonIntegralSolutionError(ValueError):
    """The unique rational solution is not integral (modeling error)."""


@dataclass
class Chain:
    """A sparse integer chain: cell dimension plus cell-id -> coefficient.

    Zero coefficients are never stored; the norm is the sum of absolute
    coefficients.
    """

    dim: int
    coeffs: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = {c: v for c, v in self.coeffs.items() if v}

    @property
    def norm(self) -> int:
        return sum(abs(v) for v in self.coeffs.values())

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "Chain") -> "Chain":
        if other.dim != self.dim:
            raise ValueError("chain dimensions differ")
        out = dict(self.coeffs)
        for c, v in other.coeffs.items():
            w = out.get(c, 0) + v
            if w:
                out[c] = w
            else:
                out.pop(c, None)
        return Chain(self.dim, out)

    def __sub__(self, other: "Chain") -> "Chain":
        return self + other.scale(-1)

    def scale(self, k: int) -> "Chain":
        if k == 0:
            return Chain(self.dim, {})
        return Chain(self.dim, {c: k * v for c, v in self.coeffs.items()})

    def __eq__(self, other):
        return isinstance(other, Chain) and self.dim == other.dim and self.coeffs == other.coeffs

    def items_sorted(self):
        return sorted(self.coeffs.items())

    def to_json(self):
        return [[c, v] for c, v in self.items_sorted()]

    @staticmethod
    def from_json(dim: int, pairs) -> "Chain":
        return Chain(dim, {int(c): int(v) for c, v in pairs})


class SparseIntMatrix:
    """Column-major sparse integer matrix; no stored zeros."""

    def __init__(self, rows: int, cols: int):
        self.rows = rows
        self.cols = cols
        self.columns: list[dict[int, int]] = [dict() for _ in range(cols)]

    @staticmethod
    def from_entries(rows: int, cols: int, entries: dict[tuple[int, int], int]) -> "SparseIntMatrix":
        m = SparseIntMatrix(rows, cols)
        for (r, c), v in entries.items():
            if v:
                m.add(r, c, v)
        return m

    def add(self, r: int, c: int, v: int):
        if not 0 <= r < self.rows or not 0 <= c < self.cols:
            raise IndexError("entry outside matrix")
        col = self.columns[c]
        w = col.get(r, 0) + v
        if w:
            col[r] = w
        else:
            col.pop(r, None)

    def entry_items(self):
        for c, col in enumerate(self.columns):
            for r, v in col.items():
                yield (r, c), v

    def nnz(self) -> int:
        return sum(len(col) for col in self.columns)

    def matvec(self, x: dict[int, int]) -> dict[int, int]:
        """Matrix times sparse column vector (keys are column ids)."""
        out: dict[int, int] = {}
        for c, xc in x.items():
            if not xc:
                continue
            for r, v in self.columns[c].items():
                w = out.get(r, 0) + v * xc
                if w:
                    out[r] = w
                else:
                    del out[r]
        return out

    def column_dot(self, c: int, y: dict[int, Fraction]):
        """Dot product of column c with a sparse row-indexed vector."""
        total = 0
        for r, v in self.columns[c].items():
            yr = y.get(r)
            if yr:
                total += v * yr
        return total

    def transpose(self) -> "SparseIntMatrix":
        t = SparseIntMatrix(self.cols, self.rows)
        for (r, c), v in self.entry_items():
            t.add(c, r, v)
        return t

    def to_dense(self) -> list[list[int]]:
        dense = [[0] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entry_items():
            dense[r][c] = v
        return dense

    def row_dicts(self) -> list[dict[int, int]]:
        rows = [dict() for _ in range(self.rows)]
        for (r, c), v in self.entry_items():
            rows[r][c] = v
        return rows


@dataclass
class KernelReport:
    rank: int
    kernel_rank: int
    basis: Optional[list[dict[int, int]]] = None


class LinearSolver:
    """Replayable exact elimination of a sparse integer matrix.

    Factoring once and replaying the recorded row operations makes
    repeated solves against the same boundary matrix cheap, which is what
    filling profiles need.
    """

    def __init__(self, matrix: SparseIntMatrix):
        self.matrix = matrix
        self.rows = matrix.rows
        self.cols = matrix.cols
        self._factor()

    def _factor(self):
        rows = self.matrix.row_dicts()
        nrows = len(rows)
        col_rows: dict[int, set[int]] = {}
        for r, row in enumerate(rows):
            for c in row:
                col_rows.setdefault(c, set()).add(r)
        heap = [(len(row), r) for r, row in enumerate(rows) if row]
        heapq.heapify(heap)
        active = set(r for r, row in enumerate(rows) if row)
        ops: list[tuple[int, int, object]] = []  # (target_row, pivot_row, factor)
        pivots: list[tuple[int, int, object]] = []  # (row, col, pivot_value)
        pivot_rows_final: dict[int, dict[int, object]] = {}
        while heap:
            nnz, pr = heapq.heappop(heap)
            if pr not in active or not rows[pr] or len(rows[pr]) != nnz:
                if pr in active and rows[pr]:
                    heapq.heappush(heap, (len(rows[pr]), pr))
                continue
            row = rows[pr]
            # prefer unit pivots, then sparse columns, then column index
            pc = min(row, key=lambda c: (0 if abs(row[c]) == 1 else 1,
                                         len(col_rows.get(c, ())), c))
            pv = row[pc]
            active.discard(pr)
            pivots.append((pr, pc, pv))
            targets = [t for t in col_rows.get(pc, ()) if t != pr and t in active]
            targets.sort()
            for t in targets:
                trow = rows[t]
                tv = trow.get(pc)
                if not tv:
                    continue
                if abs(pv) == 1:
                    f = tv * pv  # tv / pv for pv = +-1
                else:
                    f = Fraction(tv, pv)
                ops.append((t, pr, f))
                for c, v in row.items():
                    w = trow.get(c, 0) - f * v
                    if w:
                        trow[c] = w
                        col_rows.setdefault(c, set()).add(t)
                    else:
                        trow.pop(c, None)
                        s = col_rows.get(c)
                        if s:
                            s.discard(t)
                if trow:
                    heapq.heappush(heap, (len(trow), t))
            col_rows.pop(pc, None)
            pivot_rows_final[pr] = row
        # rows that eliminated to nothing must stay consistent on solve
        self.ops = ops
        self.pivots = pivots
        self.pivot_rows = pivot_rows_final
        self.pivot_cols = {c for _, c, _ in pivots}
        self.free_cols = [c for c in range(self.cols) if c not in self.pivot_cols]
        self.zero_rows = [r for r in range(nrows)
                          if r not in pivot_rows_final]

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def kernel_rank(self) -> int:
        return self.cols - self.rank

    def solve(self, b: dict[int, int], require_unique: bool = True,
              verify: bool = True) -> Optional[dict[int, int]]:
        """Solve M x = b exactly.

        Returns None when no rational solution exists.  Raises
        NonUniqueSolutionError when the kernel is nontrivial (and the
        system is consistent), NonIntegralSolutionError when the unique
        rational solution is not integral.
        """
        rhs: list = [0] * self.rows
        for r, v in b.items():
            rhs[r] = v
        for t, pr, f in self.ops:
            if rhs[pr]:
                rhs[t] = rhs[t] - f * rhs[pr]
        for r in self.zero_rows:
            if rhs[r]:
                return None
        if require_unique and self.free_cols:
            raise NonUniqueSolutionError(
                "kernel rank %d > 0" % self.kernel_rank)
        x: dict[int, Fraction] = {}
        for pr, pc, pv in reversed(self.pivots):
            row = self.pivot_rows[pr]
            acc = rhs[pr]
            for c, v in row.items():
                if c == pc:
                    continue
                xc = x.get(c)
                if xc:
                    acc -= v * xc
            val = Fraction(acc, pv) if not isinstance(acc, Fraction) else acc / pv
            if val:
                x[pc] = val
        out: dict[int, int] = {}
        for c, v in x.items():
            fv = Fraction(v)
            if fv.denominator != 1:
                raise NonIntegralSolutionError(
                    "solution has non-integral coordinate at column %d" % c)
            out[c] = int(fv)
        if verify and self.matrix.matvec(out) != {r: v for r, v in b.items() if v}:
            raise AssertionError("exact solve verification failed")
        return out

    def kernel_basis(self) -> list[dict[int, int]]:
        """Primitive integer kernel vectors, one per free column."""
        basis = []
        for fc in self.free_cols:
            x: dict[int, Fraction] = {fc: Fraction(1)}
            for pr, pc, pv in reversed(self.pivots):
                row = self.pivot_rows[pr]
                acc = Fraction(0)
                for c, v in row.items():
                    if c == pc:
                        continue
                    xc = x.get(c)
                    if xc:
                        acc -= v * xc
                val = acc / pv
                if val:
                    x[pc] = val
            denom_lcm = 1
            for v in x.values():
                fv = Fraction(v)
                denom_lcm = denom_lcm * fv.denominator // gcd(denom_lcm, fv.denominator)
            vec = {c: int(Fraction(v) * denom_lcm) for c, v in x.items()}
            g = 0
            for v in vec.values():
                g = gcd(g, abs(v))
            if g > 1:
                vec = {c: v // g for c, v in vec.items()}
            lead = vec[min(vec)]
            if lead < 0:
                vec = {c: -v for c, v in vec.items()}
            basis.append(vec)
        return basis


def kernel_rank(m: SparseIntMatrix, want_basis: bool = False) -> KernelReport:
    """Exact rank and kernel rank by integer-preserving elimination."""
    solver = LinearSolver(m)
    basis = solver.kernel_basis() if want_basis else None
    return KernelReport(solver.rank, solver.kernel_rank, basis)


def solve_exact(m: SparseIntMatrix, b: dict[int, int]) -> Optional[dict[int, int]]:
    """Unique integer solution of M x = b, or None when no rational
    solution exists.  See LinearSolver.solve for error behavior."""
    return LinearSolver(m).solve(b)


def apply_boundary(complex_, chain: Chain) -> Chain:
    """Boundary of a chain, as an exact sparse matrix-vector product."""
    if chain.dim < 1:
        raise ValueError("apply_boundary needs chain dimension >= 1")
    m = complex_.boundary_matrix(chain.dim)
    return Chain(chain.dim - 1, m.matvec(chain.coeffs))


def is_cycle(complex_, chain: Chain) -> bool:
    """True iff the boundary vanishes.  Dimension-0 chains count as
    cycles when their coefficients sum to zero on every connected
    component of the 1-skeleton (augmentation convention)."""
    if chain.dim == 0:
        comp = complex_.vertex_components()
        sums: dict[int, int] = {}
        for v, coeff in chain.coeffs.items():
            sums[comp[v]] = sums.get(comp[v], 0) + coeff
        return all(s == 0 for s in sums.values())
    return apply_boundary(complex_, chain).is_zero()

"""Exact filling volumes, restricted filling-function sampling, growth
exponent fits and the growth-preorder comparison.

A filling volume is the minimal L1 norm of a chain bounding a given
cycle, taken inside a fixed finite complex.  When the relevant boundary
operator has trivial kernel the filling is unique and exact linear
solving settles it (method UNIQUE).  Otherwise an integer program is
solved: exact rational simplex plus branch and bound on small instances,
and on large ones a float LP proposes a primal/dual pair that is then
verified in exact arithmetic; only exactly verified certificates are
ever reported as certified.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

from .chains import Chain, LinearSolver, apply_boundary, is_cycle
from .complexes import CellComplex
from .presentation import Word, random_trivial_word
from . import simplex
from .seeds import spawn_rng


class NoFillingError(ValueError):
    """The cycle is not a boundary within the given complex."""


class BudgetExceededError(RuntimeError):
    """Solver budget ran out before any feasible filling was found."""


class DegenerateFitError(ValueError):
    """All fill values agree; a log-log slope is meaningless."""


@dataclass
class SolverBudget:
    max_nodes: int = 100_000
    max_pivots: int = 400_000
    exact_row_limit: int = 320
    allow_float_propose: bool = True

    def for_rows(self, rows: int) -> bool:
        return rows <= self.exact_row_limit


@dataclass
class FillingResult:
    cycle: Chain
    filling: Chain
    volume: int
    method: str  # "UNIQUE" | "ILP"
    certified: bool
    padding_stable: Optional[bool] = None
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# solver caches per complex


def _cache(k: CellComplex) -> dict:
    return k._cache


def _boundary_solver(k: CellComplex, d: int) -> LinearSolver:
    key = ("solver", d)
    cache = _cache(k)
    if key not in cache:
        cache[key] = LinearSolver(k.boundary_matrix(d))
    return cache[key]


def _kernel_is_trivial(k: CellComplex, d: int) -> bool:
    """Whether ker of the boundary operator in dimension d vanishes.

    If (d+1)-cells with nonzero boundary exist their boundaries already
    span kernel vectors, so elimination can be skipped.
    """
    key = ("kernel_trivial", d)
    cache = _cache(k)
    if key in cache:
        return cache[key]
    verdict: Optional[bool] = None
    if d + 1 <= k.dim and k.num_cells(d + 1) > 0:
        higher = k.boundary_matrix(d + 1)
        if any(col for col in higher.columns):
            verdict = False
    if verdict is None:
        verdict = _boundary_solver(k, d).kernel_rank == 0
    cache[key] = verdict
    return verdict


# ---------------------------------------------------------------------------
# ILP machinery


def _row_basis(k: CellComplex, d: int) -> list[int]:
    solver = _boundary_solver(k, d)
    return sorted(r for r, _c, _v in solver.pivots)


def _lp_data(k: CellComplex, d: int, extra: Sequence[tuple[int, str, int]]):
    """Columns/rhs template for min |x|_1 with boundary constraints on the
    independent rows, x split as p - q, plus branch rows."""
    boundary = k.boundary_matrix(d)
    kept = _row_basis(k, d)
    row_pos = {r: i for i, r in enumerate(kept)}
    ncells = boundary.cols
    m = len(kept) + len(extra)
    columns: list[dict[int, int]] = []
    for sign in (1, -1):
        for c in range(ncells):
            col = {}
            for r, v in boundary.columns[c].items():
                i = row_pos.get(r)
                if i is not None:
                    col[i] = sign * v
            columns.append(col)
    cost = [1] * (2 * ncells)
    for j, (var, kind, _bound) in enumerate(extra):
        i = len(kept) + j
        s = 1 if kind == "le" else -1
        columns[var][i] = columns[var].get(i, 0) + s
        columns[ncells + var][i] = columns[ncells + var].get(i, 0) - s
        slack = {i: 1}
        columns.append(slack)
        cost.append(0)
    return columns, cost, kept, ncells, m


def _lp_rhs(kept, extra, s: Chain, m: int):
    b = [0] * m
    for i, r in enumerate(kept):
        b[i] = s.coeffs.get(r, 0)
    for j, (_var, kind, bound) in enumerate(extra):
        b[len(kept) + j] = bound if kind == "le" else -bound
    return b


def _chain_from_lp(x: dict[int, Fraction], ncells: int, dim: int):
    vals: dict[int, Fraction] = {}
    for j, v in x.items():
        if j < ncells:
            vals[j] = vals.get(j, Fraction(0)) + v
        elif j < 2 * ncells:
            c = j - ncells
            vals[c] = vals.get(c, Fraction(0)) - v
    return {c: v for c, v in vals.items() if v}


def _verify_filling(k: CellComplex, d: int, coeffs: dict[int, int], s: Chain) -> bool:
    return k.boundary_matrix(d).matvec(coeffs) == s.coeffs


def _solve_ilp_exact(k: CellComplex, d: int, s: Chain,
                     budget: SolverBudget) -> FillingResult:
    """Exact rational simplex on the LP relaxation plus depth-first branch
    and bound on fractional chain coefficients (most fractional first,
    ties by variable index, floor branch explored first), incumbent from
    LP rounding, best-bound reordering every 10^4 nodes."""
    incumbent: Optional[dict[int, int]] = None
    incumbent_norm: Optional[int] = None
    nodes = 0
    pivots_left = budget.max_pivots
    stack: list[tuple[tuple, Optional[Fraction]]] = [((), None)]
    meta = {"nodes": 0, "pivots": 0, "engine": "exact-simplex"}

    while stack:
        if nodes and nodes % 10_000 == 0:
            stack.sort(key=lambda item: (item[1] is not None, -(item[1] or 0)))
        extra, parent_bound = stack.pop()
        if (incumbent_norm is not None and parent_bound is not None
                and math.ceil(parent_bound) >= incumbent_norm):
            continue
        nodes += 1
        meta["nodes"] = nodes
        if nodes > budget.max_nodes:
            break
        columns, cost, kept, ncells, m = _lp_data(k, d, extra)
        b = _lp_rhs(kept, extra, s, m)
        res = simplex.solve_lp(columns, b, cost, max_pivots=pivots_left)
        pivots_left -= res.pivots
        meta["pivots"] += res.pivots
        if res.status == simplex.PIVOT_LIMIT or pivots_left <= 0:
            break
        if res.status == simplex.INFEASIBLE:
            if not extra:
                raise NoFillingError("cycle is not a boundary within the complex")
            continue
        if res.status != simplex.OPTIMAL:
            raise AssertionError(f"unexpected LP status {res.status}")
        if not extra:
            # the LP ran on a row basis; check its solution against the
            # remaining rows once, which settles solvability of the full
            # system (kept-solutions differ by kernel vectors only)
            frac_coeffs = _chain_from_lp(res.x, ncells, d)
            boundary = k.boundary_matrix(d)
            full = {}
            for c, v in frac_coeffs.items():
                for r, w in boundary.columns[c].items():
                    acc = full.get(r, 0) + w * v
                    if acc:
                        full[r] = acc
                    else:
                        full.pop(r, None)
            if full != {r: Fraction(v) for r, v in s.coeffs.items() if v}:
                raise NoFillingError("cycle is not a boundary within the complex")
        bound = res.objective
        if incumbent_norm is not None and math.ceil(bound) >= incumbent_norm:
            continue
        coeffs = _chain_from_lp(res.x, ncells, d)
        fractional = [(c, v) for c, v in coeffs.items() if v.denominator != 1]
        if not fractional:
            ints = {c: int(v) for c, v in coeffs.items()}
            if _verify_filling(k, d, ints, s):
                norm = sum(abs(v) for v in ints.values())
                if incumbent_norm is None or norm < incumbent_norm:
                    incumbent, incumbent_norm = ints, norm
                if not extra:
                    # root LP integral: relaxation equals the integer optimum
                    break
                continue
            if not extra:
                raise NoFillingError("cycle is not a boundary within the complex")
            continue
        rounded = {c: int(round(v)) for c, v in coeffs.items()}
        rounded = {c: v for c, v in rounded.items() if v}
        if _verify_filling(k, d, rounded, s):
            norm = sum(abs(v) for v in rounded.values())
            if incumbent_norm is None or norm < incumbent_norm:
                incumbent, incumbent_norm = rounded, norm
        # branch on the most fractional coefficient
        def frac_dist(v: Fraction) -> Fraction:
            f = v - v.__floor__()
            return min(f, 1 - f)
        var, value = max(fractional, key=lambda cv: (frac_dist(cv[1]), -cv[0]))
        lo = value.__floor__()
        stack.append((extra + ((var, "ge", lo + 1),), bound))
        stack.append((extra + ((var, "le", lo),), bound))

    if incumbent is None:
        raise BudgetExceededError("no feasible filling found within budget")
    certified = not stack and nodes <= budget.max_nodes and pivots_left > 0
    filling = Chain(d, incumbent)
    return FillingResult(s, filling, incumbent_norm, "ILP", certified, meta=meta)


def _rationalize(values, denominators=(1, 2, 3, 4, 6, 8, 12, 24, 1024)):
    for den in denominators:
        yield [Fraction(round(v * den), den) for v in values]


def _solve_ilp_float(k: CellComplex, d: int, s: Chain,
                     budget: SolverBudget) -> Optional[FillingResult]:
    """Float LP proposes a filling and a dual vector; both are checked in
    exact arithmetic.  Returns a certified result when the integer primal
    norm meets the exact dual bound, an uncertified incumbent when only
    the primal verifies, and None when nothing can be salvaged."""
    try:
        import numpy as np
        from scipy import sparse as sp
        from scipy.optimize import linprog
    except ImportError:
        return None
    boundary = k.boundary_matrix(d)
    nrows, ncells = boundary.rows, boundary.cols
    data, ri, ci = [], [], []
    for c in range(ncells):
        for r, v in boundary.columns[c].items():
            ri.append(r)
            ci.append(c)
            data.append(v)
            ri.append(r)
            ci.append(c + ncells)
            data.append(-v)
    a_eq = sp.coo_matrix((data, (ri, ci)), shape=(nrows, 2 * ncells)).tocsc()
    b = np.zeros(nrows)
    for r, v in s.coeffs.items():
        b[r] = v
    res = linprog(np.ones(2 * ncells), A_eq=a_eq, b_eq=b,
                  bounds=(0, None), method="highs")
    if res.status == 2:
        solver = _boundary_solver(k, d)
        if solver.solve(dict(s.coeffs), require_unique=False, verify=False) is None:
            raise NoFillingError("cycle is not a boundary within the complex")
        return None
    if not res.success:
        return None
    xs = res.x
    ints: dict[int, int] = {}
    for c in range(ncells):
        v = int(round(xs[c] - xs[c + ncells]))
        if v:
            ints[c] = v
    if not _verify_filling(k, d, ints, s):
        return None
    norm = sum(abs(v) for v in ints.values())
    meta = {"engine": "float-propose"}
    duals = getattr(res, "eqlin", None)
    best_bound: Optional[int] = None
    if duals is not None:
        marginals = list(duals.marginals)
        for y in _rationalize(marginals):
            yd = {r: v for r, v in enumerate(y) if v}
            worst = max((abs(boundary.column_dot(c, yd)) for c in range(ncells)),
                        default=Fraction(0))
            if worst > 1:
                continue
            value = sum(v * yd.get(r, 0) for r, v in s.coeffs.items())
            bound = abs(value)
            bound_int = int(bound) if bound.denominator == 1 else int(bound) + 1
            if best_bound is None or bound_int > best_bound:
                best_bound = bound_int
                meta["dual_denominator"] = max(f.denominator for f in y) if y else 1
            if bound_int == norm:
                break
    if best_bound is not None:
        meta["dual_bound"] = best_bound
    certified = best_bound is not None and best_bound == norm
    return FillingResult(s, Chain(d, ints), norm, "ILP", certified, meta=meta)


def fvol(k: CellComplex, s: Chain, budget: Optional[SolverBudget] = None,
         force_ilp: bool = False) -> FillingResult:
    """Minimal L1 filling volume of a cycle inside a finite complex.

    Routes through the unique-solution path when the boundary operator
    one dimension up has trivial kernel, otherwise minimizes exactly over
    integer chains.  Raises NoFillingError when the cycle bounds nothing
    inside the complex and BudgetExceededError when the budget dies
    before any filling is found; a budget-limited search that did find a
    filling returns it with certified=False.
    """
    if budget is None:
        budget = SolverBudget()
    d = s.dim + 1
    if not is_cycle(k, s):
        raise ValueError("chain is not a cycle")
    if s.is_zero():
        return FillingResult(s, Chain(d, {}), 0, "UNIQUE", True)
    if d > k.dim:
        raise ValueError(f"complex has no cells of dimension {d}")
    if not force_ilp and _kernel_is_trivial(k, d):
        solver = _boundary_solver(k, d)
        x = solver.solve(dict(s.coeffs))
        if x is None:
            raise NoFillingError("cycle is not a boundary within the complex")
        filling = Chain(d, x)
        return FillingResult(s, filling, filling.norm, "UNIQUE", True)
    rows = k.num_cells(d - 1)
    if budget.for_rows(rows):
        return _solve_ilp_exact(k, d, s, budget)
    if budget.allow_float_propose:
        result = _solve_ilp_float(k, d, s, budget)
        if result is not None and result.certified:
            return result
        if rows <= 4 * budget.exact_row_limit:
            try:
                return _solve_ilp_exact(k, d, s, budget)
            except BudgetExceededError:
                if result is not None:
                    return result
                raise
        if result is not None:
            return result
        raise BudgetExceededError(
            "instance too large for the exact engine and the float "
            "proposal could not be verified")
    return _solve_ilp_exact(k, d, s, budget)


# ---------------------------------------------------------------------------
# cycles and samplers


def loop_chain(k: CellComplex, path: Sequence[int]) -> Chain:
    """Edge chain of a closed vertex walk."""
    if path[0] != path[-1]:
        raise ValueError("walk is not closed")
    coeffs: dict[int, int] = {}
    for a, b in zip(path, path[1:]):
        hit = k.edge_between(a, b)
        if hit is None:
            raise ValueError(f"no edge between vertices {a} and {b}")
        e, sign = hit
        w = coeffs.get(e, 0) + sign
        if w:
            coeffs[e] = w
        else:
            del coeffs[e]
    return Chain(1, coeffs)


def word_loop_chain(k: CellComplex, word: Word) -> Optional[Chain]:
    """Edge chain of the loop a trivial word traces from the basepoint;
    None when the walk leaves the ball."""
    base = k.meta.get("basepoint")
    if base is None:
        base = next(i for i, lv in enumerate(k.levels) if lv == 0)
        k.meta["basepoint"] = base
    steps = _cache(k).setdefault("word_steps", {})
    if not steps:
        for idx, (t, h, name) in enumerate(k.edges):
            steps[(t, name, 1)] = h
            steps[(h, name, -1)] = t
    names = k.meta["generators"]
    path = [base]
    cur = base
    for x in word.letters:
        name = names[abs(x) - 1]
        nxt = steps.get((cur, name, 1 if x > 0 else -1))
        if nxt is None:
            return None
        path.append(nxt)
        cur = nxt
    if cur != base:
        raise ValueError("word does not close up; it is not trivial")
    return loop_chain(k, path)


def rectangle_cycle(k: CellComplex, a: int, b: int,
                    offset: Optional[tuple[int, ...]] = None,
                    plane: tuple[int, int] = (0, 1)) -> Chain:
    """Boundary loop of an a x b rectangle in a grid complex, traversed
    counterclockwise in the given coordinate plane, centered on the
    origin unless an offset corner is given."""
    rank = len(k.vertices[0])
    i, j = plane
    if offset is None:
        offset = tuple(-(a // 2) if t == i else (-(b // 2) if t == j else 0)
                       for t in range(rank))
    path = []

    def at(u, v):
        pt = list(offset)
        pt[i] += u
        pt[j] += v
        idx = k.vertex_index(tuple(pt))
        if idx is None:
            raise ValueError("rectangle leaves the complex")
        return idx

    for u in range(a):
        path.append(at(u, 0))
    for v in range(b):
        path.append(at(a, v))
    for u in range(a, 0, -1):
        path.append(at(u, b))
    for v in range(b, 0, -1):
        path.append(at(0, v))
    path.append(at(0, 0))
    return loop_chain(k, path)


def box_surface_cycle(k: CellComplex, dims: tuple[int, int, int],
                      offset: Optional[tuple[int, int, int]] = None) -> tuple[Chain, Chain]:
    """Boundary 2-cycle of an a x b x c box of unit cubes in a grid
    complex, together with the enclosed cube chain."""
    a, b, c = dims
    if offset is None:
        offset = (-(a // 2), -(b // 2), -(c // 2))
    cube_index = _cache(k).setdefault("cube_index", {})
    if not cube_index:
        for idx, refs in enumerate(k.faces3):
            corners = set()
            for f, _s in refs:
                for e, _s2 in k.faces2[f]:
                    t, h, _n = k.edges[e]
                    corners.add(k.vertices[t])
                    corners.add(k.vertices[h])
            base = tuple(min(pt[t] for pt in corners) for t in range(3))
            cube_index[base] = idx
    coeffs = {}
    for dx in range(a):
        for dy in range(b):
            for dz in range(c):
                base = (offset[0] + dx, offset[1] + dy, offset[2] + dz)
                idx = cube_index.get(base)
                if idx is None:
                    raise ValueError("box leaves the complex")
                coeffs[idx] = 1
    cubes = Chain(3, coeffs)
    return apply_boundary(k, cubes), cubes


@dataclass(frozen=True)
class ExplicitCycles:
    chains: tuple[Chain, ...]


@dataclass(frozen=True)
class RectangleCycles:
    """Near-square rectangles, one per achievable perimeter (plus the
    thin 1 x n rectangle when all_shapes is set)."""
    all_shapes: bool = False


@dataclass(frozen=True)
class RandomLoops:
    seed: int
    count: int


@dataclass(frozen=True)
class RelatorLoops:
    """Closed loops traced by random products of conjugated relators."""
    seed: int
    count: int
    max_relators: int = 5
    max_conjugator: int = 6


@dataclass(frozen=True)
class ExhaustiveLoops:
    """All closed non-backtracking edge walks up to the cap (<= 12),
    deduplicated by their edge chains."""
    limit: int = 12


def _gather_cycles(k: CellComplex, source, max_ell: int, margin) -> list[Chain]:
    inner = k.inner_radius(margin)
    out: list[Chain] = []

    def admit(chain: Optional[Chain]):
        if chain is None or chain.is_zero():
            return
        if chain.norm > max_ell:
            return
        if k.chain_max_level(chain) > inner:
            return
        out.append(chain)

    if isinstance(source, ExplicitCycles):
        for ch in source.chains:
            admit(ch)
    elif isinstance(source, RectangleCycles):
        if source.all_shapes:
            for a in range(1, max_ell // 4 + 1):
                for b in range(a, (max_ell - 2 * a) // 2 + 1):
                    try:
                        admit(rectangle_cycle(k, a, b))
                    except ValueError:
                        pass
        else:
            for per in range(4, max_ell + 1, 2):
                a = per // 4
                b = per // 2 - a
                if a < 1 or b < 1:
                    continue
                try:
                    admit(rectangle_cycle(k, a, b))
                except ValueError:
                    pass
    elif isinstance(source, RandomLoops):
        rng = spawn_rng(source.seed, "random-loops")
        rank = len(k.vertices[0]) if not isinstance(k.vertices[0], Word) else None
        if rank is None:
            raise ValueError("RandomLoops needs a grid complex; use RelatorLoops")
        for _ in range(source.count):
            dx = rng.randint(1, max(1, max_ell // 4))
            dy = rng.randint(1, max(1, max_ell // 4))
            if 2 * (dx + dy) > max_ell:
                continue
            axes = [0] * dx + [1] * dy
            moves = [(ax, 1) for ax in axes] + [(ax, -1) for ax in axes]
            rng.shuffle(moves)
            start = [0] * rank
            path = [k.vertex_index(tuple(start))]
            ok = True
            for ax, delta in moves:
                start[ax] += delta
                idx = k.vertex_index(tuple(start))
                if idx is None:
                    ok = False
                    break
                path.append(idx)
            if ok:
                admit(loop_chain(k, path))
    elif isinstance(source, RelatorLoops):
        pres = k.meta.get("presentation")
        if pres is None:
            raise ValueError("RelatorLoops needs a complex built with a presentation")
        rng = spawn_rng(source.seed, "relator-loops")
        for _ in range(source.count):
            w = random_trivial_word(pres, rng, source.max_relators,
                                    source.max_conjugator)
            try:
                admit(word_loop_chain(k, w))
            except ValueError:
                pass
    elif isinstance(source, ExhaustiveLoops):
        limit = min(source.limit, 12, max_ell)
        adj = k.adjacency()
        seen: set = set()

        def walk(path: list[int], last_edge: Optional[int]):
            v = path[-1]
            for u in adj[v]:
                hit = k.edge_between(v, u)
                e, _sign = hit
                if e == last_edge:
                    continue
                if u == path[0] and len(path) >= 3:
                    chain = loop_chain(k, path + [u])
                    keyc = tuple(sorted(chain.coeffs.items()))
                    keyr = tuple(sorted((c, -x) for c, x in chain.coeffs.items()))
                    if keyc not in seen and keyr not in seen:
                        seen.add(keyc)
                        admit(chain)
                if len(path) < limit and u not in path:
                    walk(path + [u], e)

        for v0 in range(len(k.vertices)):
            if k.levels[v0] <= k.inner_radius(margin):
                walk([v0], None)
    else:
        raise TypeError(f"unknown cycle source {source!r}")
    return out


# ---------------------------------------------------------------------------
# profiles


@dataclass
class ProfileSample:
    ell: int
    fill: int
    count: int
    certified: bool


@dataclass
class GrowthProfile:
    samples: list[ProfileSample]
    fitted_exponent: Optional[float] = None
    fit_window: Optional[tuple[int, int]] = None
    residual: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        lines = ["ell,max_fill,cycles_sampled,certified"]
        for s in self.samples:
            lines.append(f"{s.ell},{s.fill},{s.count},{int(s.certified)}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_csv(text: str) -> "GrowthProfile":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "ell,max_fill,cycles_sampled,certified":
            raise ValueError("profile CSV header mismatch")
        samples = []
        for ln in lines[1:]:
            parts = ln.split(",")
            if len(parts) != 4:
                raise ValueError("profile CSV row malformed")
            samples.append(ProfileSample(int(parts[0]), int(parts[1]),
                                         int(parts[2]), bool(int(parts[3]))))
        return GrowthProfile(samples)

    def to_json(self) -> dict:
        return {
            "samples": [[s.ell, s.fill, s.count, int(s.certified)] for s in self.samples],
            "fitted_exponent": self.fitted_exponent,
            "fit_window": list(self.fit_window) if self.fit_window else None,
            "residual": self.residual,
            "meta": {k: v for k, v in sorted(self.meta.items())},
        }


def restricted_fill(k: CellComplex, source, ells: Sequence[int],
                    budget: Optional[SolverBudget] = None,
                    margin: Optional[int] = None,
                    workers: int = 1,
                    padded: Optional[CellComplex] = None) -> GrowthProfile:
    """Max filling volume over sampled cycles of norm <= ell, per ell.

    Cycles must sit inside the inner ball (radius minus margin).  With a
    padded companion complex every filling is re-solved there and the
    sample row only counts as certified when volumes agree.  Aggregation
    is an order-independent max, so worker count cannot change output.
    """
    if budget is None:
        budget = SolverBudget()
    ells = sorted(set(ells))
    cycles = _gather_cycles(k, source, max(ells) if ells else 0, margin)

    def solve_one(chain: Chain) -> FillingResult:
        result = fvol(k, chain, budget)
        if padded is not None:
            padding_check(k, padded, chain, result, budget)
        return result

    if workers > 1 and len(cycles) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve_one, cycles))
    else:
        results = [solve_one(ch) for ch in cycles]

    samples = []
    for ell in ells:
        hits = [r for ch, r in zip(cycles, results) if ch.norm <= ell]
        fill = max((r.volume for r in hits), default=0)
        certified = all(r.certified and r.padding_stable is not False for r in hits)
        samples.append(ProfileSample(ell, fill, len(hits), certified))
    return GrowthProfile(samples, meta={"cycles": len(cycles)})


def growth_fit(profile: GrowthProfile,
               window: tuple[int, Optional[int]] = (8, None)) -> GrowthProfile:
    """Least-squares slope of log(fill) against log(ell) over the window.

    Needs at least 4 strictly increasing sample points with positive
    fills; raises DegenerateFitError when every fill in the window is
    equal (including the all-zero profile of a filling-free complex).
    """
    lo, hi = window
    pts = [(s.ell, s.fill) for s in profile.samples
           if s.ell >= lo and (hi is None or s.ell <= hi)]
    if len({f for _e, f in pts}) <= 1:
        raise DegenerateFitError("all fill values in the window agree")
    if any(f <= 0 for _e, f in pts):
        raise ValueError("fit window contains nonpositive fills")
    if len(pts) < 4:
        raise ValueError("need at least 4 sample points in the window")
    xs = [math.log(e) for e, _f in pts]
    ys = [math.log(f) for _e, f in pts]
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    residual = math.sqrt(sum((y - (slope * x + intercept)) ** 2
                             for x, y in zip(xs, ys)) / len(xs))
    return replace(profile, fitted_exponent=slope,
                   fit_window=(pts[0][0], pts[-1][0]), residual=residual)


@dataclass
class GrowthComparison:
    """Result of testing f(n) <= C g(Cn + C) + Cn + C over sampled n."""
    c: Optional[int]
    holds: bool
    failures: list[int]
    extrapolated: bool
    cmax: int


def _profile_eval(profile: GrowthProfile, m: int) -> tuple[int, bool]:
    """Step-function value of a profile at m; beyond the sampled range the
    fitted power law extends it (flat when no fit is available), flagged."""
    samples = profile.samples
    if not samples:
        return 0, False
    if m < samples[0].ell:
        return 0, False
    last = samples[0]
    for s in samples:
        if s.ell <= m:
            last = s
        else:
            return last.fill, False
    if m == last.ell:
        return last.fill, False
    if profile.fitted_exponent is not None and last.fill > 0:
        value = last.fill * (m / last.ell) ** profile.fitted_exponent
        return int(math.floor(value)), True
    return last.fill, True


def compare_growth(f: GrowthProfile, g: GrowthProfile, cmax: int) -> GrowthComparison:
    """Smallest C <= cmax with f(n) <= C g(Cn + C) + Cn + C on all of f's
    sampled n, or holds=False with the failure points of the best C."""
    best_c = None
    best_failures: Optional[list[int]] = None
    extrapolated = False
    for c in range(1, cmax + 1):
        failures = []
        for s in f.samples:
            gv, extra = _profile_eval(g, c * s.ell + c)
            extrapolated = extrapolated or extra
            if s.fill > c * gv + c * s.ell + c:
                failures.append(s.ell)
        if not failures:
            return GrowthComparison(c, True, [], extrapolated, cmax)
        if best_failures is None or len(failures) < len(best_failures):
            best_c, best_failures = c, failures
    return GrowthComparison(best_c, False, best_failures or [], extrapolated, cmax)


# ---------------------------------------------------------------------------
# padding


def transfer_chain(src: CellComplex, dst: CellComplex, chain: Chain) -> Chain:
    """Re-express a chain of src in dst by matching cell labels; src must
    be a subcomplex of dst (a smaller ball of the same construction)."""
    if chain.dim == 0:
        return Chain(0, {_require(dst.vertex_index(src.vertices[v]), v): x
                         for v, x in chain.coeffs.items()})
    vmap = {}

    def map_vertex(v: int) -> int:
        if v not in vmap:
            idx = dst.vertex_index(src.vertices[v])
            if idx is None:
                raise ValueError("vertex missing in target complex")
            vmap[v] = idx
        return vmap[v]

    if chain.dim == 1:
        out: dict[int, int] = {}
        for e, x in chain.coeffs.items():
            t, h, _n = src.edges[e]
            hit = dst.edge_between(map_vertex(t), map_vertex(h))
            if hit is None:
                raise ValueError("edge missing in target complex")
            e2, sign = hit
            out[e2] = out.get(e2, 0) + sign * x
        return Chain(1, out)
    if chain.dim == 2:
        face_index = _cache(dst).setdefault("face_key_index", {})
        if not face_index:
            for idx, walk in enumerate(dst.faces2):
                face_index[_face_label_key(dst, walk)] = idx
        out = {}
        for f, x in chain.coeffs.items():
            key = _face_label_key_mapped(src, dst, src.faces2[f], map_vertex)
            idx = face_index.get(key)
            if idx is None:
                raise ValueError("face missing in target complex")
            out[idx] = out.get(idx, 0) + x
        return Chain(2, out)
    raise ValueError("transfer supports dimensions 0..2")


def _require(idx, v):
    if idx is None:
        raise ValueError(f"vertex {v} missing in target complex")
    return idx


def _face_label_key(k: CellComplex, walk):
    pairs = []
    for e, s in walk:
        t, h, _n = k.edges[e]
        kt, kh = CellComplex._label_key(k.vertices[t]), CellComplex._label_key(k.vertices[h])
        pairs.append((kt, kh) if s > 0 else (kh, kt))
    return _loop_key(pairs)


def _face_label_key_mapped(src, dst, walk, map_vertex):
    pairs = []
    for e, s in walk:
        t, h, _n = src.edges[e]
        t2, h2 = map_vertex(t), map_vertex(h)
        kt = CellComplex._label_key(dst.vertices[t2])
        kh = CellComplex._label_key(dst.vertices[h2])
        pairs.append((kt, kh) if s > 0 else (kh, kt))
    return _loop_key(pairs)


def _loop_key(pairs):
    n = len(pairs)
    rev = [(b, a) for (a, b) in reversed(pairs)]
    candidates = []
    for base in (pairs, rev):
        for i in range(n):
            candidates.append(tuple(base[i:] + base[:i]))
    return min(candidates)


def padding_check(k: CellComplex, k_padded: CellComplex, s: Chain,
                  result: FillingResult,
                  budget: Optional[SolverBudget] = None) -> bool:
    """Re-solve the filling in an enlarged ball; the result is stable when
    the volume is unchanged.  Guards against ball-truncation artifacts."""
    s2 = transfer_chain(k, k_padded, s)
    other = fvol(k_padded, s2, budget)
    stable = other.volume == result.volume
    result.padding_stable = stable
    result.meta["padded_volume"] = other.volume
    return stable

"""Finite balls of Cayley 1- and 2-complexes, grid complexes for Z^n
(n <= 3), boundary matrices and cell subdivision.

Vertex labels are canonical forms: freely reduced words (free groups),
sorted exponent words (free abelian), ShortLex-least geodesic words
(small-cancellation oracles, certified geodesic by the breadth-first
construction itself) or lattice points (grids).  All construction is
deterministic, so serialized complexes are byte-stable.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .chains import SparseIntMatrix
from .presentation import (
    CyclicWord,
    Presentation,
    SmallCancellationRequired,
    Word,
    _dehn_index,
    check_small_cancellation,
    dehn_reduce,
    free_reduce,
)

DEFAULT_VERTEX_CAP = 2_000_000

_AXIS_NAMES = ("x", "y", "z")


class VertexCapExceeded(RuntimeError):
    """Ball construction would exceed the configured vertex cap."""


class MismatchedBoundaryError(ValueError):
    """A subdivision pattern does not reproduce the face boundary."""


def _letter_order(num_generators: int) -> list[int]:
    out = []
    for i in range(1, num_generators + 1):
        out.append(i)
        out.append(-i)
    return out


# ---------------------------------------------------------------------------
# permutation helpers for the separating fingerprints


def _perm_compose(p, q):
    return tuple(p[q[i]] for i in range(len(p)))


def _perm_inverse(p):
    out = [0] * len(p)
    for i, v in enumerate(p):
        out[v] = i
    return tuple(out)


def _perm_commutator(a, b):
    return _perm_compose(_perm_compose(a, b),
                         _perm_compose(_perm_inverse(a), _perm_inverse(b)))


def _random_perm(rng, degree):
    vals = list(range(degree))
    rng.shuffle(vals)
    return tuple(vals)


def _surface_quotients(genus: int, degree: int = 12):
    """Two permutation quotients of the genus-g surface group, used only
    as separating invariants for vertex identification.  The images are
    arranged so the surface relator maps to the identity."""
    quotients = []
    for seed, conjugated in ((271828, False), (314159, True)):
        rng = random.Random(seed)
        a = _random_perm(rng, degree)
        b = _random_perm(rng, degree)
        if conjugated:
            sigma = _perm_commutator(a, b)
            si = _perm_inverse(sigma)
            second = (_perm_compose(si, _perm_compose(b, sigma)),
                      _perm_compose(si, _perm_compose(a, sigma)))
        else:
            second = (b, a)
        ident = tuple(range(degree))
        images = [a, b, second[0], second[1]]
        while len(images) < 2 * genus:
            images.append(ident)
        check = ident
        for i in range(0, 2 * genus, 2):
            check = _perm_compose(check, _perm_commutator(images[i], images[i + 1]))
        if check != ident:
            raise AssertionError("surface quotient does not kill the relator")
        quotients.append(tuple(images))
    return quotients


# ---------------------------------------------------------------------------
# abelianization reduction (coset fingerprint for generic presentations)


def _hnf_rows(vectors: list[list[int]], n: int) -> list[tuple[int, list[int]]]:
    """Row-style Hermite basis of the integer lattice spanned by the
    vectors; returns (leading column, row) pairs with positive leads."""
    rows = [list(v) for v in vectors if any(v)]
    basis: list[tuple[int, list[int]]] = []
    for col in range(n):
        holders = [r for r in rows if r[col] != 0]
        if not holders:
            continue
        while len(holders) > 1:
            holders.sort(key=lambda r: abs(r[col]))
            small = holders[0]
            for r in holders[1:]:
                q = r[col] // small[col]
                for i in range(n):
                    r[i] -= q * small[i]
            holders = [r for r in rows if r[col] != 0]
        lead = holders[0]
        if lead[col] < 0:
            lead[:] = [-v for v in lead]
        rows.remove(lead)
        for r in rows:
            if r[col]:
                q = r[col] // lead[col]
                for i in range(n):
                    r[i] -= q * lead[i]
        rows = [r for r in rows if any(r)]
        basis.append((col, lead))
    return basis


def _hnf_reduce(vec: tuple[int, ...], basis) -> tuple[int, ...]:
    v = list(vec)
    for col, row in basis:
        q = v[col] // row[col]
        if q:
            for i in range(len(v)):
                v[i] -= q * row[i]
    return tuple(v)


# ---------------------------------------------------------------------------
# breadth-first automaton for small-cancellation oracles


class _DehnAutomaton:
    """Grows the Cayley graph of a C'(1/6) presentation level by level.

    Vertices carry ShortLex-least geodesic labels.  Identification of
    candidate neighbors uses exact Dehn-algorithm equality, pre-filtered
    by cheap homomorphic fingerprints (abelianization coset plus optional
    permutation quotients), so the expensive check runs only on genuine
    or near collisions.
    """

    def __init__(self, presentation: Presentation, perm_quotients=()):
        self.p = presentation
        self.gens = presentation.num_generators
        self.slots = _letter_order(self.gens)  # slot -> letter
        self.slot_of = {letter: s for s, letter in enumerate(self.slots)}
        vecs = []
        for r in presentation.relators:
            v = [0] * self.gens
            for x in r.canonical.letters:
                v[abs(x) - 1] += 1 if x > 0 else -1
            vecs.append(v)
        self.hnf = _hnf_rows(vecs, self.gens)
        self.perm_letter: list[list[tuple]] = []
        for images in perm_quotients:
            per_slot = []
            for letter in self.slots:
                img = images[abs(letter) - 1]
                per_slot.append(img if letter > 0 else _perm_inverse(img))
            self.perm_letter.append(per_slot)
        self.table = _dehn_index(presentation)
        ab0 = _hnf_reduce((0,) * self.gens, self.hnf)
        fp0 = [ab0]
        for images in perm_quotients:
            fp0.append(tuple(range(len(images[0]))))
        self.labels: list[tuple[int, ...]] = [()]
        self.levels: list[int] = [0]
        self.fps: list[tuple] = [tuple(fp0)]
        self.buckets: dict[tuple, list[int]] = {tuple(fp0): [0]}
        self.label_index: dict[tuple[int, ...], int] = {(): 0}
        self.trans: list[list[Optional[int]]] = [[None] * len(self.slots)]
        self.level_end: list[int] = [1]  # level_end[d] = #vertices with level <= d
        self.built = 0
        self.lateral_done: set[int] = set()

    # -- fingerprints -----------------------------------------------------

    def _fp_step(self, fp: tuple, slot: int) -> tuple:
        letter = self.slots[slot]
        ab = list(fp[0])
        ab[abs(letter) - 1] += 1 if letter > 0 else -1
        parts = [_hnf_reduce(tuple(ab), self.hnf)]
        for q, per_slot in enumerate(self.perm_letter):
            old = fp[1 + q]
            g = per_slot[slot]
            parts.append(tuple(old[g[i]] for i in range(len(g))))
        return tuple(parts)

    # -- exact equality ----------------------------------------------------

    def _trivial(self, letters: tuple[int, ...]) -> bool:
        table = self.table
        cur = letters
        while True:
            i, j = 0, len(cur)
            while j - i >= 2 and cur[i] == -cur[j - 1]:
                i += 1
                j -= 1
            cur = cur[i:j]
            n = len(cur)
            if n == 0:
                return True
            doubled = cur + cur
            best = None
            for off in range(n):
                cands = table.get(doubled[off])
                if not cands:
                    continue
                for rot, rlen in cands:
                    limit = min(n, rlen)
                    m = 0
                    while m < limit and doubled[off + m] == rot[m]:
                        m += 1
                    if 2 * m > rlen and (best is None or m > best[0]):
                        best = (m, off, rot)
            if best is None:
                return False
            m, off, rot = best
            rotated = doubled[off:off + n]
            merged = tuple(-x for x in reversed(rot[m:])) + rotated[m:]
            out: list[int] = []
            for x in merged:
                if out and out[-1] == -x:
                    out.pop()
                else:
                    out.append(x)
            cur = tuple(out)

    def _equal_words(self, a: tuple[int, ...], b: tuple[int, ...]) -> bool:
        if a == b:
            return True
        merged = a + tuple(-x for x in reversed(b))
        out: list[int] = []
        for x in merged:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        return self._trivial(tuple(out))

    # -- growth ------------------------------------------------------------

    def _resolve(self, v: int, slot: int, allow_create: bool,
                 vertex_cap: int) -> int:
        """Target vertex of one generator step, identifying against known
        vertices; -1 when outside the built region and creation is off."""
        label = self.labels[v]
        letter = self.slots[slot]
        if label and label[-1] == -letter:
            w = label[:-1]
        else:
            w = label + (letter,)
        hit = self.label_index.get(w)
        if hit is not None:
            return hit
        d = self.levels[v]
        fp = self._fp_step(self.fps[v], slot)
        bucket = self.buckets.get(fp)
        if bucket:
            # the element one step from level d sits at level d-1, d or d+1
            for u in bucket:
                if abs(self.levels[u] - d) <= 1 and self._equal_words(w, self.labels[u]):
                    return u
        if not allow_create:
            return -1
        if len(self.labels) >= vertex_cap:
            raise VertexCapExceeded(
                f"vertex cap {vertex_cap} exceeded at radius {d + 1}")
        idx = len(self.labels)
        self.labels.append(w)
        self.levels.append(d + 1)
        self.fps.append(fp)
        self.buckets.setdefault(fp, []).append(idx)
        self.label_index[w] = idx
        self.trans.append([None] * len(self.slots))
        return idx

    def ensure_radius(self, radius: int, vertex_cap: int = DEFAULT_VERTEX_CAP):
        while self.built < radius:
            d = self.built
            start = self.level_end[d - 1] if d else 0
            end = self.level_end[d]
            for v in range(start, end):
                row = self.trans[v]
                for slot in range(len(self.slots)):
                    if row[slot] is None or row[slot] == -1:
                        row[slot] = self._resolve(v, slot, True, vertex_cap)
            self.built = d + 1
            self.level_end.append(len(self.labels))

    def ensure_lateral(self, radius: int):
        """Resolve transitions among the outermost level without growing."""
        if self.built > radius or radius in self.lateral_done:
            return
        start = self.level_end[radius - 1] if radius else 0
        end = self.level_end[radius]
        for v in range(start, end):
            row = self.trans[v]
            for slot in range(len(self.slots)):
                if row[slot] is None:
                    row[slot] = self._resolve(v, slot, False, 0)
        self.lateral_done.add(radius)

    def ball_target(self, v: int, letter: int, radius: int) -> Optional[int]:
        t = self.trans[v][self.slot_of[letter]]
        if t is None or t < 0 or self.levels[t] > radius:
            return None
        return t

    def vertex_count(self, radius: int) -> int:
        return self.level_end[radius]


# ---------------------------------------------------------------------------
# group oracles


class GroupOracle:
    """A terminating word-problem strategy together with the presentation
    data needed to attach 2-cells.

    normal_form(w) agrees on two words exactly when they represent the
    same group element: free reduction for free groups, sorted exponent
    words for free abelian groups, Dehn reduction plus ShortLex geodesic
    canonicalization for small-cancellation presentations.
    """

    def __init__(self, kind: str, presentation: Presentation, auto=None,
                 max_auto_radius: int = 24):
        self.kind = kind
        self.presentation = presentation
        self._auto = auto
        self.max_auto_radius = max_auto_radius

    def __repr__(self):
        return f"GroupOracle({self.kind}, gens={self.presentation.generator_names})"

    # -- constructors -------------------------------------------------------

    @staticmethod
    def free(rank: int) -> "GroupOracle":
        names = tuple("abcdefghijklmnopqrstuvwxyz"[:rank])
        return GroupOracle("FREE", Presentation(names, ()))

    @staticmethod
    def free_abelian(rank: int) -> "GroupOracle":
        if not 1 <= rank <= 3:
            raise ValueError("free abelian rank must be 1..3")
        names = tuple("abc"[:rank])
        relators = []
        for i in range(rank):
            for j in range(i + 1, rank):
                a, b = i + 1, j + 1
                relators.append(CyclicWord.from_word(Word((a, b, -a, -b))))
        return GroupOracle("FREE_ABELIAN", Presentation(names, tuple(relators)))

    @staticmethod
    def surface(genus: int) -> "GroupOracle":
        if genus < 2:
            raise ValueError("surface oracle needs genus >= 2")
        if 2 * genus > 26:
            raise ValueError("genus too large for single-letter generators")
        names = tuple("abcdefghijklmnopqrstuvwxyz"[:2 * genus])
        letters: list[int] = []
        for i in range(0, 2 * genus, 2):
            a, b = i + 1, i + 2
            letters.extend((a, b, -a, -b))
        pres = Presentation(names, (CyclicWord.from_word(Word(tuple(letters))),))
        oracle = GroupOracle("SURFACE", pres)
        if not check_small_cancellation(pres, Fraction(1, 6)):
            raise AssertionError("surface presentation unexpectedly fails C'(1/6)")
        oracle._auto = _DehnAutomaton(pres, _surface_quotients(genus))
        return oracle

    @staticmethod
    def dehn(presentation: Presentation) -> "GroupOracle":
        if not check_small_cancellation(presentation, Fraction(1, 6)):
            raise SmallCancellationRequired(
                "DEHN oracle requires a C'(1/6) presentation")
        if presentation.proper_power_indices():
            raise ValueError("DEHN oracle refuses proper-power relators")
        for r in presentation.relators:
            if len(r) < 3:
                raise ValueError(
                    "relators of length < 3 would break the simplicial 1-skeleton")
        return GroupOracle("DEHN", presentation, _DehnAutomaton(presentation))

    # -- normal forms -------------------------------------------------------

    def exponent_vector(self, w: Word) -> tuple[int, ...]:
        v = [0] * self.presentation.num_generators
        for x in w.letters:
            v[abs(x) - 1] += 1 if x > 0 else -1
        return tuple(v)

    def _vector_word(self, vec: tuple[int, ...]) -> Word:
        letters: list[int] = []
        for i, e in enumerate(vec):
            letters.extend([i + 1 if e > 0 else -(i + 1)] * abs(e))
        return Word(tuple(letters))

    def normal_form(self, w: Word) -> Word:
        if self.kind == "FREE":
            return free_reduce(w.letters)
        if self.kind == "FREE_ABELIAN":
            return self._vector_word(self.exponent_vector(w))
        reduced = dehn_reduce(w, self.presentation)
        if reduced.is_identity():
            return reduced
        n = len(reduced)
        if n > self.max_auto_radius:
            raise VertexCapExceeded(
                f"normal form search radius {n} exceeds cap {self.max_auto_radius}")
        auto = self._auto
        auto.ensure_radius(n)
        v = 0
        for letter in reduced.letters:
            v = auto.trans[v][auto.slot_of[letter]]
        return Word(auto.labels[v])


# ---------------------------------------------------------------------------
# cell complexes


@dataclass
class CellComplex:
    """A finite cell complex with a simplicial 1-skeleton.

    faces2 entries are closed edge walks stored as ((edge, sign), ...);
    faces3 entries are signed 2-face collections.  levels[v] is the graph
    distance from the basepoint (word length or sup-norm), used for
    truncation margins.
    """

    dim: int
    vertices: list
    levels: list[int]
    edges: list[tuple[int, int, str]]
    faces2: list[tuple[tuple[int, int], ...]]
    faces3: list[tuple[tuple[int, int], ...]]
    radius: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self._vertex_index = {self._label_key(l): i for i, l in enumerate(self.vertices)}
        if len(self._vertex_index) != len(self.vertices):
            raise ValueError("vertex labels are not pairwise distinct")
        self._edge_pair: dict[tuple[int, int], tuple[int, int]] = {}
        for idx, (t, h, _name) in enumerate(self.edges):
            if t == h:
                raise ValueError("loop edge breaks the simplicial 1-skeleton")
            if (t, h) in self._edge_pair or (h, t) in self._edge_pair:
                raise ValueError("parallel edge breaks the simplicial 1-skeleton")
            self._edge_pair[(t, h)] = (idx, 1)
            self._edge_pair[(h, t)] = (idx, -1)
        self._adj: Optional[list[list[int]]] = None
        self._bnd: dict[int, SparseIntMatrix] = {}
        self._cache: dict = {}

    @staticmethod
    def _label_key(label):
        return label.letters if isinstance(label, Word) else label

    # -- cells ---------------------------------------------------------------

    def num_cells(self, d: int) -> int:
        if d == 0:
            return len(self.vertices)
        if d == 1:
            return len(self.edges)
        if d == 2:
            return len(self.faces2)
        if d == 3:
            return len(self.faces3)
        return 0

    def vertex_index(self, label) -> Optional[int]:
        return self._vertex_index.get(self._label_key(label))

    def edge_between(self, u: int, v: int) -> Optional[tuple[int, int]]:
        return self._edge_pair.get((u, v))

    def boundary_matrix(self, d: int) -> SparseIntMatrix:
        """Signed incidence matrix from d-cells to (d-1)-cells."""
        if d < 1 or d > self.dim:
            raise ValueError(f"no boundary operator in dimension {d}")
        if d in self._bnd:
            return self._bnd[d]
        if d == 1:
            m = SparseIntMatrix(len(self.vertices), len(self.edges))
            for idx, (t, h, _name) in enumerate(self.edges):
                m.add(t, idx, -1)
                m.add(h, idx, 1)
        elif d == 2:
            m = SparseIntMatrix(len(self.edges), len(self.faces2))
            for idx, walk in enumerate(self.faces2):
                for e, s in walk:
                    m.add(e, idx, s)
        else:
            m = SparseIntMatrix(len(self.faces2), len(self.faces3))
            for idx, refs in enumerate(self.faces3):
                for f, s in refs:
                    m.add(f, idx, s)
        self._bnd[d] = m
        return m

    # -- graph structure ------------------------------------------------------

    def adjacency(self) -> list[list[int]]:
        if self._adj is None:
            adj: list[list[int]] = [[] for _ in self.vertices]
            for (t, h, _name) in self.edges:
                adj[t].append(h)
                adj[h].append(t)
            self._adj = adj
        return self._adj

    def graph_distances(self, source: int, cutoff: Optional[int] = None) -> list[Optional[int]]:
        adj = self.adjacency()
        dist: list[Optional[int]] = [None] * len(self.vertices)
        dist[source] = 0
        frontier = [source]
        d = 0
        while frontier and (cutoff is None or d < cutoff):
            nxt = []
            for v in frontier:
                for u in adj[v]:
                    if dist[u] is None:
                        dist[u] = d + 1
                        nxt.append(u)
            frontier = nxt
            d += 1
        return dist

    def vertex_components(self) -> list[int]:
        comp = [-1] * len(self.vertices)
        adj = self.adjacency()
        current = 0
        for start in range(len(self.vertices)):
            if comp[start] >= 0:
                continue
            stack = [start]
            comp[start] = current
            while stack:
                v = stack.pop()
                for u in adj[v]:
                    if comp[u] < 0:
                        comp[u] = current
                        stack.append(u)
            current += 1
        return comp

    def inner_radius(self, margin: Optional[int] = None) -> int:
        """Working region radius: cycles must stay inside this level to
        be trusted against truncation (default margin ceil(radius/3))."""
        if margin is None:
            margin = -(-self.radius // 3)
        return max(self.radius - margin, 0)

    def chain_max_level(self, chain) -> int:
        """Largest basepoint distance touched by the cells of a chain."""
        worst = 0
        if chain.dim == 0:
            for v in chain.coeffs:
                worst = max(worst, self.levels[v])
        elif chain.dim == 1:
            for e in chain.coeffs:
                t, h, _ = self.edges[e]
                worst = max(worst, self.levels[t], self.levels[h])
        elif chain.dim == 2:
            for f in chain.coeffs:
                for e, _s in self.faces2[f]:
                    t, h, _ = self.edges[e]
                    worst = max(worst, self.levels[t], self.levels[h])
        else:
            for c in chain.coeffs:
                for f, _s in self.faces3[c]:
                    for e, _s2 in self.faces2[f]:
                        t, h, _ = self.edges[e]
                        worst = max(worst, self.levels[t], self.levels[h])
        return worst

    # -- serialization ---------------------------------------------------------

    def label_str(self, label) -> str:
        if isinstance(label, Word):
            if not label.letters:
                return "1"
            names = self.meta.get("generators", ())
            toks = []
            for x in label.letters:
                name = names[abs(x) - 1]
                toks.append(name if x > 0 else name + "^-1")
            return " ".join(toks)
        return " ".join(str(c) for c in label)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "radius": self.radius,
            "kind": self.meta.get("kind", ""),
            "vertices": [self.label_str(l) for l in self.vertices],
            "levels": list(self.levels),
            "edges": [[t, h, name] for (t, h, name) in self.edges],
            "faces2": [[[e, s] for (e, s) in walk] for walk in self.faces2],
            "faces3": [[[f, s] for (f, s) in refs] for refs in self.faces3],
        }


def _face_canonical_key(walk: tuple[tuple[int, int], ...]):
    """Dedup key for a closed edge walk: minimum over rotations of the
    walk and of its orientation reversal."""
    seqs = []
    n = len(walk)
    fwd = list(walk)
    rev = [(e, -s) for (e, s) in reversed(walk)]
    for base in (fwd, rev):
        for i in range(n):
            seqs.append(tuple(base[i:] + base[:i]))
    return min(seqs)


# ---------------------------------------------------------------------------
# Cayley balls


def build_cayley_ball(oracle: GroupOracle, radius: int,
                      vertex_cap: int = DEFAULT_VERTEX_CAP,
                      include_faces: bool = True) -> CellComplex:
    """Breadth-first metric ball of the Cayley complex.

    Vertices are all canonical forms at word distance <= radius from the
    identity; edges are generator moves between retained vertices; one
    2-face per (vertex, relator) whose boundary loop stays inside the
    ball, deduplicated up to rotation and orientation reversal.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    p = oracle.presentation
    letters = _letter_order(p.num_generators)

    if oracle.kind in ("SURFACE", "DEHN"):
        auto = oracle._auto
        auto.ensure_radius(radius, vertex_cap)
        auto.ensure_lateral(radius)
        count = auto.vertex_count(radius)
        labels = [Word(auto.labels[i]) for i in range(count)]
        levels = auto.levels[:count]

        def step(v: int, letter: int) -> Optional[int]:
            return auto.ball_target(v, letter, radius)
    else:
        labels = []
        levels = []
        index: dict[tuple[int, ...], int] = {}

        if oracle.kind == "FREE":
            def canon(letters_tuple):
                return free_reduce(letters_tuple)
        else:
            def canon(letters_tuple):
                return oracle.normal_form(free_reduce(letters_tuple))

        start = Word(())
        labels.append(start)
        levels.append(0)
        index[()] = 0
        frontier = [0]
        for d in range(radius):
            nxt = []
            for v in frontier:
                base = labels[v].letters
                for letter in letters:
                    w = canon(base + (letter,))
                    if w.letters not in index:
                        if len(labels) >= vertex_cap:
                            raise VertexCapExceeded(
                                f"vertex cap {vertex_cap} exceeded at radius {d + 1}")
                        index[w.letters] = len(labels)
                        labels.append(w)
                        levels.append(d + 1)
                        nxt.append(index[w.letters])
            frontier = nxt

        def step(v: int, letter: int) -> Optional[int]:
            w = canon(labels[v].letters + (letter,))
            return index.get(w.letters)

    edges: list[tuple[int, int, str]] = []
    edge_of: dict[tuple[int, int], int] = {}
    for v in range(len(labels)):
        for g in range(1, p.num_generators + 1):
            u = step(v, g)
            if u is None:
                continue
            if (v, u) in edge_of or (u, v) in edge_of:
                raise ValueError("parallel edges; relators of length <= 2 "
                                 "must be rejected before ball construction")
            edge_of[(v, u)] = len(edges)
            edges.append((v, u, p.generator_names[g - 1]))

    def signed_edge(a: int, b: int, letter: int) -> tuple[int, int]:
        if letter > 0:
            return edge_of[(a, b)], 1
        return edge_of[(b, a)], -1

    faces2: list[tuple[tuple[int, int], ...]] = []
    if include_faces and p.relators:
        seen = set()
        for v in range(len(labels)):
            for r in p.relators:
                cur = v
                walk = []
                ok = True
                for letter in r.canonical.letters:
                    nxt_v = step(cur, letter)
                    if nxt_v is None:
                        ok = False
                        break
                    walk.append(signed_edge(cur, nxt_v, letter))
                    cur = nxt_v
                if not ok:
                    continue
                if cur != v:
                    raise AssertionError("relator loop failed to close")
                key = _face_canonical_key(tuple(walk))
                if key in seen:
                    continue
                seen.add(key)
                faces2.append(tuple(walk))

    dim = 2 if faces2 else 1
    meta = {
        "kind": f"cayley:{oracle.kind}",
        "generators": p.generator_names,
        "relator_lengths": tuple(len(r) for r in p.relators),
        "presentation": p,
    }
    return CellComplex(dim, labels, list(levels), edges, faces2, [], radius, meta)


# ---------------------------------------------------------------------------
# grid complexes


def build_grid_complex(rank: int, radius: int,
                       vertex_cap: int = DEFAULT_VERTEX_CAP) -> CellComplex:
    """Cubical ball of Z^rank: lattice points with sup-norm <= radius,
    plus all unit edges, squares and cubes fully contained in the box.

    Squares are oriented counterclockwise in each coordinate plane and
    cubes carry the outward-normal convention, fixed globally.
    """
    if not 1 <= rank <= 3:
        raise ValueError("grid rank must be 1..3")
    if radius < 1:
        raise ValueError("radius must be >= 1")
    side = 2 * radius + 1
    if side ** rank > vertex_cap:
        raise VertexCapExceeded(f"grid with {side ** rank} vertices exceeds cap")
    coords = range(-radius, radius + 1)
    vertices = [tuple(v) for v in itertools.product(coords, repeat=rank)]
    index = {v: i for i, v in enumerate(vertices)}
    levels = [max(abs(c) for c in v) for v in vertices]

    def shifted(v, axis, delta=1):
        w = list(v)
        w[axis] += delta
        return tuple(w)

    edges: list[tuple[int, int, str]] = []
    edge_of: dict[tuple[int, int], int] = {}
    for vi, v in enumerate(vertices):
        for axis in range(rank):
            if v[axis] < radius:
                u = index[shifted(v, axis)]
                edge_of[(vi, axis)] = len(edges)
                edges.append((vi, u, _AXIS_NAMES[axis]))

    faces2: list[tuple[tuple[int, int], ...]] = []
    square_of: dict[tuple[int, int, int], int] = {}
    if rank >= 2:
        for vi, v in enumerate(vertices):
            for i in range(rank):
                for j in range(i + 1, rank):
                    if v[i] < radius and v[j] < radius:
                        e1 = edge_of[(vi, i)]
                        e2 = edge_of[(index[shifted(v, i)], j)]
                        e3 = edge_of[(index[shifted(v, j)], i)]
                        e4 = edge_of[(vi, j)]
                        square_of[(vi, i, j)] = len(faces2)
                        faces2.append(((e1, 1), (e2, 1), (e3, -1), (e4, -1)))

    faces3: list[tuple[tuple[int, int], ...]] = []
    if rank == 3:
        for vi, v in enumerate(vertices):
            if all(v[a] < radius for a in range(3)):
                refs = []
                for k in range(3):
                    i, j = [a for a in range(3) if a != k]
                    sign = (-1) ** k
                    top = square_of[(index[shifted(v, k)], i, j)]
                    bottom = square_of[(vi, i, j)]
                    refs.append((top, sign))
                    refs.append((bottom, -sign))
                faces3.append(tuple(refs))

    meta = {"kind": f"grid{rank}"}
    return CellComplex(rank, vertices, levels, edges, faces2, faces3, radius, meta)


# ---------------------------------------------------------------------------
# subdivision


@dataclass(frozen=True)
class SubdivisionPattern:
    """Replacement of one 2-face by a triangulation-style pattern.

    interior_edges are new edges between existing vertices; each face is
    a closed walk over refs ("e", edge_index, sign) into the original
    edge list or ("i", k, sign) into interior_edges.
    """

    interior_edges: tuple[tuple[int, int], ...]
    faces: tuple[tuple[tuple[str, int, int], ...], ...]


def subdivide_cell(k: CellComplex, face_id: int,
                   pattern: SubdivisionPattern) -> tuple[CellComplex, dict[int, tuple[int, ...]]]:
    """Replace a 2-face by the pattern's faces; returns the new complex
    and a correspondence mapping every old face id to its new ids.

    The pattern must reproduce the face boundary: the old-edge chain of
    the pattern faces has to equal the face's chain and interior edges
    must cancel, otherwise MismatchedBoundaryError is raised.
    """
    if not 0 <= face_id < len(k.faces2):
        raise IndexError("face id out of range")
    old_walk = k.faces2[face_id]

    new_edges = list(k.edges)
    interior_ids = []
    for n, (t, h) in enumerate(pattern.interior_edges):
        if t == h:
            raise MismatchedBoundaryError("interior edge is a loop")
        if k.edge_between(t, h) is not None:
            raise MismatchedBoundaryError("interior edge duplicates an existing edge")
        interior_ids.append(len(new_edges))
        new_edges.append((t, h, f"chord{n}"))

    def endpoints(ref):
        tag, idx, sign = ref
        if tag == "e":
            t, h, _ = k.edges[idx]
        elif tag == "i":
            t, h = pattern.interior_edges[idx]
        else:
            raise MismatchedBoundaryError(f"unknown ref tag {tag!r}")
        return (t, h) if sign > 0 else (h, t)

    net_old: dict[int, int] = {}
    net_interior: dict[int, int] = {}
    new_faces_local: list[tuple[tuple[int, int], ...]] = []
    for walk in pattern.faces:
        if not walk:
            raise MismatchedBoundaryError("empty pattern face")
        prev_head = None
        first_tail = None
        compiled = []
        for ref in walk:
            tail, head = endpoints(ref)
            if first_tail is None:
                first_tail = tail
            if prev_head is not None and prev_head != tail:
                raise MismatchedBoundaryError("pattern walk is not connected")
            prev_head = head
            tag, idx, sign = ref
            if tag == "e":
                net_old[idx] = net_old.get(idx, 0) + sign
                compiled.append((idx, sign))
            else:
                net_interior[idx] = net_interior.get(idx, 0) + sign
                compiled.append((interior_ids[idx], sign))
        if prev_head != first_tail:
            raise MismatchedBoundaryError("pattern walk does not close")
        new_faces_local.append(tuple(compiled))

    face_net: dict[int, int] = {}
    for e, s in old_walk:
        face_net[e] = face_net.get(e, 0) + s
    if {e: v for e, v in net_old.items() if v} != {e: v for e, v in face_net.items() if v}:
        raise MismatchedBoundaryError("pattern faces do not reproduce the face boundary")
    if any(v for v in net_interior.values()):
        raise MismatchedBoundaryError("interior edges do not cancel in the pattern")

    new_faces2 = (list(k.faces2[:face_id]) + new_faces_local
                  + list(k.faces2[face_id + 1:]))
    shift = len(new_faces_local) - 1
    correspondence: dict[int, tuple[int, ...]] = {}
    for old_id in range(len(k.faces2)):
        if old_id < face_id:
            correspondence[old_id] = (old_id,)
        elif old_id == face_id:
            correspondence[old_id] = tuple(range(face_id, face_id + len(new_faces_local)))
        else:
            correspondence[old_id] = (old_id + shift,)

    new_faces3 = []
    for refs in k.faces3:
        out = []
        for f, s in refs:
            for nf in correspondence[f]:
                out.append((nf, s))
        new_faces3.append(tuple(out))

    k2 = CellComplex(max(k.dim, 2), list(k.vertices), list(k.levels), new_edges,
                     new_faces2, new_faces3, k.radius,
                     dict(k.meta, subdivided=True))
    return k2, correspondence

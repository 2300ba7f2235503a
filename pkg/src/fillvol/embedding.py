"""Coarse-embedding specifications, Lipschitz/compression estimation,
the finite-radius extended target complex with its cellular map, and the
metric / filling consequences that construction certifies.

Given a vertex map f from a source ball X into a target ball Z, the
extended complex Y is Z plus one new edge for every vertex pair at
target distance between 2 and C, each new edge closed up by a 2-cell
along a deterministic geodesic.  The map phi then sends source edges to
single Y-edges and each source 2-cell to the cells of a minimal filling
of its mapped boundary in Z plus the crossed bridge cells.  M = phi(X)
carries its own graph metric.  All metric statements are evaluated on
vertices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .chains import Chain
from .complexes import CellComplex, build_grid_complex
from .filling import (
    NoFillingError,
    SolverBudget,
    fvol,
    GrowthProfile,
    ProfileSample,
    compare_growth,
)
from .presentation import Word
from .seeds import spawn_rng


class EmbeddingError(ValueError):
    pass


class GeodesicEscapesBall(EmbeddingError):
    """A needed geodesic is not contained in the target ball; enlarge the
    target radius."""


class UnfillableLoop(EmbeddingError):
    """A mapped 2-cell boundary is not nullhomologous inside the target
    ball; enlarge the target radius."""


@dataclass
class EmbeddingSpec:
    """A vertex map between ball builders, with an optional exact target
    metric (grids) used to certify added-edge distances."""

    kind: str
    source_builder: Callable[[int], CellComplex]
    target_builder: Callable[[int], CellComplex]
    map_label: Callable[[object], object]
    target_distance: Optional[Callable[[object, object], int]] = None


def _l1(u, v) -> int:
    return sum(abs(a - b) for a, b in zip(u, v))


def _grid_builder(rank: int) -> Callable[[int], CellComplex]:
    return lambda radius: build_grid_complex(rank, radius)


def builtin_logmap() -> EmbeddingSpec:
    """Z -> Z^2, n |-> (floor(log2(|n|+1)), n): a staircase that
    compresses one axis logarithmically.  The floor keeps vertices on the
    lattice; the drawing is already a staircase."""
    def phi(label):
        (n,) = label
        return ((abs(n) + 1).bit_length() - 1, n)
    return EmbeddingSpec("LOGMAP", _grid_builder(1), _grid_builder(2), phi, _l1)


def builtin_axis_inclusion() -> EmbeddingSpec:
    def phi(label):
        (n,) = label
        return (n, 0)
    return EmbeddingSpec("AXIS_INCLUSION", _grid_builder(1), _grid_builder(2), phi, _l1)


def builtin_plane_inclusion() -> EmbeddingSpec:
    def phi(label):
        x, y = label
        return (x, y, 0)
    return EmbeddingSpec("PLANE_INCLUSION", _grid_builder(2), _grid_builder(3), phi, _l1)


def parse_embedding_file(text: str, source_builder, target_builder,
                         target_distance=None, kind: str = "FILE") -> EmbeddingSpec:
    """Line format: `x1 ... xk -> y1 ... ym` with labels written the way
    complexes serialize them (space-separated integers for grids)."""
    mapping: dict[tuple, tuple] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise EmbeddingError(f"line {lineno}: missing '->'")
        left, right = line.split("->", 1)
        src = tuple(int(t) for t in left.split())
        dst = tuple(int(t) for t in right.split())
        if src in mapping:
            raise EmbeddingError(f"line {lineno}: duplicate source vertex")
        mapping[src] = dst

    def phi(label):
        try:
            return mapping[label]
        except KeyError:
            raise EmbeddingError(f"vertex {label} missing from embedding file")

    return EmbeddingSpec(kind, source_builder, target_builder, phi, target_distance)


# ---------------------------------------------------------------------------
# moduli


@dataclass
class ModuliEstimate:
    """Per-distance envelopes of observed image distances.

    per_distance[t] = (min, max) over sampled source pairs at distance t;
    lipschitz_c is the t = 1 maximum.  not_coarse_suspected flags a lower
    envelope that never grew past its t = 1 value: a heuristic witness,
    never a proof.
    """

    per_distance: dict[int, tuple[int, int]]
    lipschitz_c: int
    not_coarse_suspected: bool
    pairs_sampled: int

    def lower_envelope(self, t: int) -> Optional[int]:
        hit = self.per_distance.get(t)
        return hit[0] if hit else None


def estimate_moduli(spec: EmbeddingSpec, source_radius: int,
                    sample_count: int = 20_000, seed: int = 0) -> ModuliEstimate:
    """Sample (or exhaust, when the ball is small) source vertex pairs and
    record min/max image distance per source distance."""
    x = spec.source_builder(source_radius)
    n = len(x.vertices)
    images = [spec.map_label(lbl) for lbl in x.vertices]

    if spec.target_distance is None:
        raise EmbeddingError("moduli estimation needs a target metric")

    per: dict[int, list[int]] = {}
    pairs = 0

    def record(i: int, j: int, dist_source: int):
        nonlocal pairs
        d_img = spec.target_distance(images[i], images[j])
        lohi = per.get(dist_source)
        if lohi is None:
            per[dist_source] = [d_img, d_img]
        else:
            if d_img < lohi[0]:
                lohi[0] = d_img
            if d_img > lohi[1]:
                lohi[1] = d_img
        pairs += 1

    exhaustive = n * (n - 1) // 2 <= sample_count
    if exhaustive:
        for i in range(n):
            dist = x.graph_distances(i)
            for j in range(i + 1, n):
                record(i, j, dist[j])
    else:
        rng = spawn_rng(seed, "moduli", spec.kind)
        dist_cache: dict[int, list] = {}
        for _ in range(sample_count):
            i = rng.randrange(n)
            j = rng.randrange(n)
            if i == j:
                continue
            if i not in dist_cache:
                dist_cache[i] = x.graph_distances(i)
                if len(dist_cache) > 64:
                    dist_cache.pop(next(iter(dist_cache)))
            record(i, j, dist_cache[i][j])

    envelopes = {t: (lo, hi) for t, (lo, hi) in sorted(per.items())}
    lip = envelopes.get(1, (0, 0))[1]
    tmax = max(envelopes)
    suspected = envelopes[tmax][0] <= envelopes.get(1, (0, 0))[0]
    return ModuliEstimate(envelopes, lip, suspected, pairs)


# ---------------------------------------------------------------------------
# extended complex


@dataclass
class ExtendedComplex:
    source: CellComplex
    base: CellComplex               # the target ball Z
    y: CellComplex                  # Z plus bridges and bridge cells
    m: CellComplex                  # image subcomplex with its own metric
    spec: EmbeddingSpec
    c: int                          # edge-length bound used for bridges
    phi_v: list[int]                # source vertex -> Y vertex
    phi_e: list[tuple[int, int]]    # source edge -> (Y edge, sign)
    phi_f: list[Chain]              # source 2-cell -> 2-chain in Y
    n_bound: int                    # max 2-cells in any single-cell image
    added_edges: list[tuple[int, int]]
    added_face_ids: list[int]
    m_vertex_of_y: dict[int, int]
    m_edge_of_y: dict[int, int]
    m_face_of_y: dict[int, int]
    meta: dict = field(default_factory=dict)

    def push_forward(self, chain: Chain) -> Chain:
        """Chain map induced by phi, valued in Y."""
        if chain.dim == 0:
            out: dict[int, int] = {}
            for v, x in chain.coeffs.items():
                w = self.phi_v[v]
                out[w] = out.get(w, 0) + x
            return Chain(0, {k: v for k, v in out.items() if v})
        if chain.dim == 1:
            out = {}
            for e, x in chain.coeffs.items():
                ye, sign = self.phi_e[e]
                out[ye] = out.get(ye, 0) + sign * x
            return Chain(1, {k: v for k, v in out.items() if v})
        if chain.dim == 2:
            total = Chain(2, {})
            for f, x in chain.coeffs.items():
                total = total + self.phi_f[f].scale(x)
            return total
        raise ValueError("push_forward supports dimensions 0..2")

    def to_m(self, chain: Chain) -> Chain:
        """Re-index a Y-chain supported on the image into M's cells."""
        table = {0: self.m_vertex_of_y, 1: self.m_edge_of_y, 2: self.m_face_of_y}[chain.dim]
        out = {}
        for c, x in chain.coeffs.items():
            out[table[c]] = x
        return Chain(chain.dim, out)


def _grid_geodesic(u: tuple, v: tuple) -> list[tuple]:
    """Axis-ordered staircase between lattice points; stays inside the
    bounding box, hence inside any sup-norm ball containing both ends."""
    path = [u]
    cur = list(u)
    for axis in range(len(u)):
        step = 1 if v[axis] > cur[axis] else -1
        while cur[axis] != v[axis]:
            cur[axis] += step
            path.append(tuple(cur))
    return path


def _close_pairs(z: CellComplex, c: int):
    """All vertex pairs of the target ball at distance in [2, c], with the
    distance; exact lattice metric when labels are points, in-ball BFS
    otherwise."""
    pairs: list[tuple[int, int, int]] = []
    if c < 2:
        return pairs
    if not isinstance(z.vertices[0], Word):
        index = z._vertex_index
        offsets = []
        rank = len(z.vertices[0])

        def gen(prefix, remaining):
            if len(prefix) == rank:
                if 2 <= sum(abs(t) for t in prefix) <= c:
                    offsets.append(tuple(prefix))
                return
            for t in range(-remaining, remaining + 1):
                gen(prefix + [t], remaining - abs(t))

        gen([], c)
        for vi, label in enumerate(z.vertices):
            for off in offsets:
                other = tuple(a + b for a, b in zip(label, off))
                oi = index.get(other)
                if oi is not None and oi > vi:
                    pairs.append((vi, oi, sum(abs(t) for t in off)))
    else:
        for vi in range(len(z.vertices)):
            dist = z.graph_distances(vi, cutoff=c)
            for oi, d in enumerate(dist):
                if d is not None and 2 <= d <= c and oi > vi:
                    pairs.append((vi, oi, d))
    return pairs


def _geodesic_vertices(z: CellComplex, u: int, v: int, c: int) -> list[int]:
    if not isinstance(z.vertices[0], Word):
        pts = _grid_geodesic(z.vertices[u], z.vertices[v])
        path = []
        for pt in pts:
            idx = z.vertex_index(pt)
            if idx is None:
                raise GeodesicEscapesBall(
                    "geodesic leaves the target ball; enlarge the target radius")
            path.append(idx)
        return path
    dist = z.graph_distances(v, cutoff=c + 1)
    if dist[u] is None:
        raise GeodesicEscapesBall(
            "endpoints not joined inside the target ball; enlarge the target radius")
    path = [u]
    cur = u
    while cur != v:
        candidates = [w for w in z.adjacency()[cur]
                      if dist[w] is not None and dist[w] == dist[cur] - 1]
        cur = min(candidates)
        path.append(cur)
    return path


def build_extended_complex(x: CellComplex, z: CellComplex, spec: EmbeddingSpec,
                           c: int, budget: Optional[SolverBudget] = None) -> ExtendedComplex:
    """Realize the extension at finite radius.

    Adds a bridge edge for every target vertex pair at distance in
    [2, c] (distance-1 pairs already carry edges; duplicating them would
    break the simplicial 1-skeleton), closes each bridge with a 2-cell
    along a deterministic geodesic, extends the vertex map cellularly and
    records the expansion bound N plus the image subcomplex M.
    """
    images: list[int] = []
    for lbl in x.vertices:
        target_label = spec.map_label(lbl)
        idx = z.vertex_index(target_label)
        if idx is None:
            raise EmbeddingError(
                f"image vertex {target_label} missing; enlarge the target radius")
        images.append(idx)
    if len(set(images)) != len(images):
        raise EmbeddingError("vertex map is not injective on the source ball")
    inner_src = x.inner_radius()
    inner_tgt = z.inner_radius()
    worst = max((z.levels[images[i]] for i in range(len(images))
                 if x.levels[i] <= inner_src), default=0)
    if worst > inner_tgt:
        raise EmbeddingError(
            f"inner-ball images reach level {worst} > inner radius "
            f"{inner_tgt}; enlarge the target radius")

    pairs = _close_pairs(z, c)
    edges = list(z.edges)
    bridge_of: dict[tuple[int, int], int] = {}
    for u, v, _d in pairs:
        bridge_of[(u, v)] = len(edges)
        edges.append((u, v, "bridge"))

    faces2 = list(z.faces2)
    added_face_ids = []
    y_pre = CellComplex(max(z.dim, 2) if pairs or z.faces2 else z.dim,
                        list(z.vertices), list(z.levels), edges,
                        faces2, list(z.faces3), z.radius,
                        dict(z.meta, kind=z.meta.get("kind", "") + "+bridges"))
    bridge_faces: dict[int, tuple[tuple[int, int], ...]] = {}
    for u, v, d in pairs:
        path = _geodesic_vertices(z, u, v, c)
        if len(path) - 1 != d:
            raise GeodesicEscapesBall(
                "in-ball geodesic longer than the true distance; enlarge the target radius")
        walk = []
        for a, b in zip(path, path[1:]):
            e, s = y_pre.edge_between(a, b)
            walk.append((e, s))
        walk.append((bridge_of[(u, v)], -1))
        bridge_faces[bridge_of[(u, v)]] = tuple(walk)

    for eid in sorted(bridge_faces):
        added_face_ids.append(len(faces2))
        faces2.append(bridge_faces[eid])
    y = CellComplex(max(z.dim, 2) if faces2 else 1, list(z.vertices),
                    list(z.levels), edges, faces2, list(z.faces3), z.radius,
                    dict(z.meta, kind=z.meta.get("kind", "") + "+extended"))

    phi_v = [images[i] for i in range(len(x.vertices))]
    phi_e: list[tuple[int, int]] = []
    for (t, h, _name) in x.edges:
        a, b = phi_v[t], phi_v[h]
        hit = y.edge_between(a, b)
        if hit is None:
            raise EmbeddingError(
                f"edge image at distance > {c}; raise the Lipschitz bound")
        phi_e.append(hit)

    phi_f: list[Chain] = []
    n_bound = 0
    for f, walk in enumerate(x.faces2):
        sy: dict[int, int] = {}
        for e, s in walk:
            ye, ys = phi_e[e]
            w = sy.get(ye, 0) + s * ys
            if w:
                sy[ye] = w
            else:
                sy.pop(ye, None)
        bridge_part = Chain(2, {})
        sz = dict(sy)
        for ye in list(sz):
            if ye < len(z.edges):
                continue
            coeff = sz.pop(ye)
            face_id = added_face_ids[ye - len(z.edges)]
            bridge_part = bridge_part + Chain(2, {face_id: coeff})
            for ge, gs in y.faces2[face_id][:-1]:
                w = sz.get(ge, 0) + gs * coeff
                if w:
                    sz[ge] = w
                else:
                    sz.pop(ge, None)
        try:
            fill = fvol(z, Chain(1, sz), budget)
        except NoFillingError as exc:
            raise UnfillableLoop(
                "mapped 2-cell boundary has no filling in the target ball; "
                "enlarge the target radius") from exc
        image_chain = Chain(2, dict(fill.filling.coeffs)) + bridge_part
        phi_f.append(image_chain)
        n_bound = max(n_bound, len(image_chain.coeffs))

    m_vertices = sorted(set(phi_v))
    m_edges = sorted({ye for ye, _s in phi_e})
    m_faces = sorted({f for ch in phi_f for f in ch.coeffs})
    m_vertex_of_y = {yv: i for i, yv in enumerate(m_vertices)}
    m_edge_of_y = {ye: i for i, ye in enumerate(m_edges)}
    m_face_of_y = {yf: i for i, yf in enumerate(m_faces)}
    medges = []
    for ye in m_edges:
        t, h, name = y.edges[ye]
        medges.append((m_vertex_of_y[t], m_vertex_of_y[h], name))
    mfaces = []
    for yf in m_faces:
        mfaces.append(tuple((m_edge_of_y[e], s) for e, s in y.faces2[yf]))
    m = CellComplex(2 if mfaces else 1,
                    [y.vertices[i] for i in m_vertices],
                    [y.levels[i] for i in m_vertices],
                    medges, mfaces, [], z.radius,
                    {"kind": "image-subcomplex",
                     "generators": y.meta.get("generators", ())})

    return ExtendedComplex(x, z, y, m, spec, c, phi_v, phi_e, phi_f,
                           n_bound, [(u, v) for u, v, _d in pairs],
                           added_face_ids, m_vertex_of_y, m_edge_of_y,
                           m_face_of_y)


# ---------------------------------------------------------------------------
# collision bound and quasi-isometry check


@dataclass
class CollisionReport:
    measured: int
    l_bound: int            # max(measured, 1)
    n_bound: int
    theoretical: Optional[int]   # L' + 2N from the moduli estimate
    overlap_pairs: int


def collision_bound(ext: ExtendedComplex,
                    moduli: Optional[ModuliEstimate] = None) -> CollisionReport:
    """How badly injectivity fails beyond the 1-skeleton.

    phi is injective on vertices and edges by construction; overlaps can
    only happen between 2-cell images.  The measured value is the largest
    source distance between two 2-cells whose image chains share a target
    cell (their subdivided interiors meet there); the returned bound is
    max(measured, 1).
    """
    by_cell: dict[int, list[int]] = {}
    for f, ch in enumerate(ext.phi_f):
        for cell in ch.coeffs:
            by_cell.setdefault(cell, []).append(f)
    overlap: set[tuple[int, int]] = set()
    for cells in by_cell.values():
        for i in range(len(cells)):
            for j in range(i + 1, len(cells)):
                overlap.add((cells[i], cells[j]))
    measured = 0
    x = ext.source
    for f1, f2 in sorted(overlap):
        v1 = {x.edges[e][0] for e, _s in x.faces2[f1]} | {x.edges[e][1] for e, _s in x.faces2[f1]}
        v2 = {x.edges[e][0] for e, _s in x.faces2[f2]} | {x.edges[e][1] for e, _s in x.faces2[f2]}
        best = None
        for a in sorted(v1):
            dist = x.graph_distances(a)
            for b in sorted(v2):
                d = dist[b]
                if d is not None and (best is None or d < best):
                    best = d
        if best is not None:
            measured = max(measured, best)
    theoretical = None
    if moduli is not None:
        threshold = 2 * ext.n_bound + 1
        lprime = 0
        for t, (lo, _hi) in sorted(moduli.per_distance.items()):
            if lo <= threshold:
                lprime = t
        theoretical = lprime + 2 * ext.n_bound
    return CollisionReport(measured, max(measured, 1), ext.n_bound,
                           theoretical, len(overlap))


@dataclass
class QiReport:
    l_bound: int
    lower_slope_ok: bool
    upper_slope_ok: bool
    worst_pair: Optional[tuple[int, int, str, str]]
    pairs_checked: int


def qi_verify(ext: ExtendedComplex, sample_count: int = 20_000,
              seed: int = 0, l_bound: Optional[int] = None) -> QiReport:
    """Check d_X(x1,x2)/(L+1) - 2L/(L+1) <= d_M(phi x1, phi x2) and the
    Lipschitz upper bound d_M <= d_X on sampled (or exhaustive) vertex
    pairs of the source ball."""
    if l_bound is None:
        l_bound = collision_bound(ext).l_bound
    x = ext.source
    m = ext.m
    n = len(x.vertices)
    exhaustive = n * (n - 1) // 2 <= sample_count
    if exhaustive:
        candidates = [(i, j) for i in range(n) for j in range(i + 1, n)]
    else:
        rng = spawn_rng(seed, "qi-pairs")
        candidates = []
        for _ in range(sample_count):
            i, j = rng.randrange(n), rng.randrange(n)
            if i != j:
                candidates.append((min(i, j), max(i, j)))
    lower_ok = True
    upper_ok = True
    worst = None
    worst_margin = None
    dist_x: dict[int, list] = {}
    dist_m: dict[int, list] = {}
    for i, j in candidates:
        if i not in dist_x:
            dist_x[i] = x.graph_distances(i)
            dist_m[i] = m.graph_distances(ext.m_vertex_of_y[ext.phi_v[i]])
        dx = dist_x[i][j]
        dm = dist_m[i][ext.m_vertex_of_y[ext.phi_v[j]]]
        if dx is None or dm is None:
            continue
        # lower: dx - 2L <= dm (L+1), exact in integers
        margin = dm * (l_bound + 1) - (dx - 2 * l_bound)
        if margin < 0:
            lower_ok = False
        if dm > dx:
            upper_ok = False
        if worst_margin is None or margin < worst_margin:
            worst_margin = margin
            worst = (i, j, f"{dx - 2 * l_bound}/{l_bound + 1}", str(dm))
    return QiReport(l_bound, lower_ok, upper_ok, worst, len(candidates))


# ---------------------------------------------------------------------------
# filling comparisons


@dataclass
class FillingComparison:
    rows: list[dict]
    pushforward_bound_ok: bool
    ambient_kernel_trivial: bool
    ambient_equal: bool            # FVol_M == FVol_Y on every cycle
    ambient_dominated: bool        # FVol_Y <= FVol_M on every cycle
    source_vs_image: Optional[object] = None  # GrowthComparison or None

    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "pushforward_bound_ok": self.pushforward_bound_ok,
            "ambient_kernel_trivial": self.ambient_kernel_trivial,
            "ambient_equal": self.ambient_equal,
            "ambient_dominated": self.ambient_dominated,
        }


def compare_fillings(ext: ExtendedComplex, cycles: list[Chain],
                     budget: Optional[SolverBudget] = None) -> FillingComparison:
    """For each source cycle s: FVol_X(s), FVol_M(phi s) and FVol_Y(phi s),
    with the pushforward bound FVol_M <= N FVol_X and the ambient
    relation (equality whenever ker of the ambient boundary vanishes)."""
    from .filling import _kernel_is_trivial
    rows = []
    push_ok = True
    equal = True
    dominated = True
    kernel_trivial = _kernel_is_trivial(ext.y, 2) if ext.y.dim >= 2 else True
    for s in cycles:
        vol_x = fvol(ext.source, s, budget)
        ps = ext.push_forward(s)
        pm = ext.to_m(ps)
        vol_m = fvol(ext.m, pm, budget)
        vol_y = fvol(ext.y, ps, budget)
        n_eff = max(ext.n_bound, 1)
        if vol_m.volume > n_eff * vol_x.volume:
            push_ok = False
        if vol_m.volume != vol_y.volume:
            equal = False
        if vol_y.volume > vol_m.volume:
            dominated = False
        rows.append({
            "norm": s.norm,
            "fvol_source": vol_x.volume,
            "fvol_image": vol_m.volume,
            "fvol_ambient": vol_y.volume,
            "certified": vol_x.certified and vol_m.certified and vol_y.certified,
        })
    comparison = None
    if len(rows) >= 2:
        fx = GrowthProfile([ProfileSample(r["norm"], r["fvol_source"], 1, True)
                            for r in sorted(rows, key=lambda r: r["norm"])])
        fm = GrowthProfile([ProfileSample(r["norm"], r["fvol_image"], 1, True)
                            for r in sorted(rows, key=lambda r: r["norm"])])
        comparison = compare_growth(fm, fx, cmax=max(ext.n_bound, 1) + 1)
    return FillingComparison(rows, push_ok, kernel_trivial, equal, dominated,
                             comparison)

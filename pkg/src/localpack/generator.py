"""Generation of triangulations by vertex insertion, and counting bounds.

Every triangulation with n >= 5 vertices has a vertex of degree 3, 4 or 5
whose removal (followed by re-triangulating the hole) gives a triangulation
with n - 1 vertices.  Inverting the three removal moves therefore produces
all triangulations of size n from those of size n - 1.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .colorgraph import ColorGraph, canonical_form
from .errors import BadDegree, CapExceeded, DiagonalExists

MAX_N = 12


def _rebuild(G: ColorGraph, n: int, faces, vc, ec, new_color: int) -> ColorGraph:
    probe = ColorGraph.from_faces(n, faces)
    colors = {}
    for e in probe.edge_colors:
        colors[e] = ec.get(e, new_color)
    return ColorGraph(probe.rotation, vc, colors, G.m)


def reduce_vertex(G: ColorGraph, v: int, new_color: int | None = None) -> ColorGraph:
    """Delete a vertex of degree 3, 4 or 5 and triangulate the hole.

    Degree 4 adds a diagonal between the second and fourth neighbours (the
    other diagonal when that one exists); degree 5 adds two diagonals from one
    neighbour, trying the five rotations in turn.  Vertices above v shift down
    by one.  New edges take ``new_color``, which defaults to 1 for uncoloured
    graphs and 0 (unassigned) otherwise.

    Raises
    ------
    BadDegree, DiagonalExists
    """
    k = G.degree(v)
    if k not in (3, 4, 5) or G.n <= 4:
        raise BadDegree(f"vertex {v} has degree {k}")
    if new_color is None:
        new_color = 1 if G.is_uncolored() else 0
    ring = list(G.rotation[v])
    if k == 3:
        fans = [[]]
    elif k == 4:
        fans = [[(1, 3)], [(0, 2)]]
    else:
        fans = [[((s) % 5, (s + 2) % 5), (s % 5, (s + 3) % 5)] for s in range(5)]
    chosen = None
    for fan in fans:
        if all(not G.has_edge(ring[a], ring[b]) for a, b in fan):
            chosen = fan
            break
    if chosen is None:
        raise DiagonalExists(f"every diagonal choice at vertex {v} already exists")
    keep = [f for f in G.faces() if v not in f]
    # hole boundary runs ring[0] -> ring[1] -> ... ; fan triangles follow it
    if k == 3:
        new = [tuple(ring)]
    elif k == 4:
        a, b = chosen[0]
        r = ring[a:] + ring[:a]
        new = [(r[0], r[1], r[2]), (r[2], r[3], r[0])]
    else:
        s = chosen[0][0]
        r = ring[s:] + ring[:s]
        new = [(r[0], r[1], r[2]), (r[0], r[2], r[3]), (r[0], r[3], r[4])]
    shift = lambda x: x - 1 if x > v else x  # noqa: E731
    faces = [tuple(shift(x) for x in f) for f in keep + new]
    vc = [c for i, c in enumerate(G.vertex_colors) if i != v]
    ec = {(shift(i), shift(j)): c for (i, j), c in G.edge_colors.items() if v not in (i, j)}
    return _rebuild(G, G.n - 1, faces, vc, ec, new_color)


def _insert(G: ColorGraph, faces, vc_new: int = 1, new_color: int = 1) -> ColorGraph:
    vc = list(G.vertex_colors) + [vc_new]
    return _rebuild(G, G.n + 1, faces, vc, dict(G.edge_colors), new_color)


def expand_by_process(G: ColorGraph) -> dict[int, list[ColorGraph]]:
    """Candidates with one more vertex, grouped by insertion process.

    1. a degree-3 vertex inside every face;
    2. every edge subdivided, the new vertex joined to the two opposite apexes;
    3. for every face and each two of its three neighbouring faces, the two
       shared edges removed and a vertex joined to the five surrounding vertices.
    """
    z = G.n
    faces = G.faces()
    out: dict[int, list[ColorGraph]] = {1: [], 2: [], 3: []}
    fset = set()
    third = {}
    for f in faces:
        a, b, c = f
        for x, y, w in ((a, b, c), (b, c, a), (c, a, b)):
            fset.add((x, y, w))
            third[(x, y)] = w
    for f in faces:
        a, b, c = f
        rest = [g for g in faces if g != f]
        out[1].append(_insert(G, rest + [(a, b, z), (b, c, z), (c, a, z)]))
    for i, j in G.edges:
        v = third[(i, j)]
        w = third[(j, i)]
        rest = [g for g in faces if not ({i, j} <= set(g))]
        new = [(i, z, v), (z, j, v), (j, z, w), (z, i, w)]
        out[2].append(_insert(G, rest + new))
    for f in faces:
        for a, b, c in ((f[0], f[1], f[2]), (f[1], f[2], f[0]), (f[2], f[0], f[1])):
            # fan centre b: faces across a-b and b-c
            v = third[(b, a)]
            w = third[(c, b)]
            if v == w:
                continue
            drop = {_canon((a, b, c)), _canon((b, a, v)), _canon((c, b, w))}
            rest = [g for g in faces if g not in drop]
            new = [(c, a, z), (a, v, z), (v, b, z), (b, w, z), (w, c, z)]
            out[3].append(_insert(G, rest + new))
    return out


def _canon(tri):
    k = tri.index(min(tri))
    return tuple(tri[k:] + tri[:k])


def expand(G: ColorGraph) -> list[ColorGraph]:
    parts = expand_by_process(G)
    return parts[1] + parts[2] + parts[3]


def tetrahedron_graph() -> ColorGraph:
    return ColorGraph.from_faces(4, [(0, 1, 2), (0, 2, 3), (0, 3, 1), (1, 3, 2)])


def tutte_bounds(n: int) -> tuple[Fraction, Fraction]:
    f = math.factorial
    common = Fraction(f(4 * n - 11), f(3 * n - 7) * f(n - 2))
    return common / (6 * (n - 2)), 2 * common


@dataclass
class LevelStats:
    n: int
    raw: dict[int, int]
    deduped: int
    tutte_lower: Fraction
    tutte_upper: Fraction

    @property
    def within_tutte(self) -> bool:
        return self.tutte_lower <= self.deduped <= self.tutte_upper


@dataclass
class GenerationBatch:
    n: int
    graphs: list[ColorGraph]
    stats: list[LevelStats] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.graphs)

    def ratio_ok(self) -> bool:
        """``g(k) / g(k - 1) <= 11 (k - 3)`` at every level."""
        prev = None
        for s in self.stats:
            if prev is not None and s.deduped > 11 * (s.n - 3) * prev:
                return False
            prev = s.deduped
        return True

    def stats_csv(self) -> str:
        lines = ["n,raw_process1,raw_process2,raw_process3,deduped,tutte_lower,tutte_upper,within_tutte"]
        for s in self.stats:
            lines.append(
                f"{s.n},{s.raw.get(1, 0)},{s.raw.get(2, 0)},{s.raw.get(3, 0)},{s.deduped},"
                f"{float(s.tutte_lower):.12g},{float(s.tutte_upper):.12g},{int(s.within_tutte)}"
            )
        return "\n".join(lines) + "\n"

    def ndjson(self) -> str:
        return "".join(json.dumps(g.to_dict(), sort_keys=True) + "\n" for g in self.graphs)


def enumerate_triangulations(n: int) -> GenerationBatch:
    """All triangulations with n vertices up to isomorphism (mirror images identified)."""
    if n > MAX_N:
        raise CapExceeded(f"n = {n} exceeds the cap {MAX_N}")
    if n < 4:
        raise ValueError("triangulations need at least four vertices")
    level = {canonical_form(tetrahedron_graph()): tetrahedron_graph()}
    lo, hi = tutte_bounds(4)
    stats = [LevelStats(4, {}, 1, lo, hi)]
    for k in range(5, n + 1):
        raw = {1: 0, 2: 0, 3: 0}
        nxt: dict[str, ColorGraph] = {}
        for key in sorted(level):
            for proc, cands in expand_by_process(level[key]).items():
                raw[proc] += len(cands)
                for c in cands:
                    ck = canonical_form(c)
                    if ck not in nxt:
                        nxt[ck] = c
        level = nxt
        lo, hi = tutte_bounds(k)
        stats.append(LevelStats(k, raw, len(level), lo, hi))
    graphs = [level[key] for key in sorted(level)]
    return GenerationBatch(n, graphs, stats)


def coloring_bound(n: int, m: int) -> Fraction:
    """``2 (4n - 11)! m^(4n - 6) / ((3n - 7)! (n - 2)!)`` as an exact rational."""
    if n < 4 or m < 1:
        raise ValueError("need n >= 4 and m >= 1")
    # (4n-11)!/((3n-9)!(n-2)!) is a binomial coefficient; divide the rest out.
    binom = math.comb(4 * n - 11, n - 2)
    return Fraction(2 * binom * m ** (4 * n - 6), (3 * n - 8) * (3 * n - 7))


def coloring_bound_sum(m: int, n_max: int = 11 ** 3) -> Fraction:
    """``sum_{n=4}^{n_max} coloring_bound(n, m)``."""
    return sum((coloring_bound(n, m) for n in range(4, n_max + 1)), Fraction(0))

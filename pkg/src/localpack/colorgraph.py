"""Vertex and edge coloured planar triangulations.

A :class:`ColorGraph` stores a rotation system: ``rotation[i]`` lists the
neighbours of vertex i in counterclockwise order.  Triangular faces are the
triples ``(i, a, succ_i(a))``; a consistent orientation means that for every
such face also ``succ_a(succ_i(a)) == i``.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .bodies import Body, catalog
from .cell import LocalCell, PointConfig, build_cell, classify_packing
from .errors import ColorCountMismatch, NotGeneral, NotTriangulable


def _edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


class ColorGraph:
    """Coloured triangulation of the sphere.

    Parameters
    ----------
    rotation : sequence of sequences
        Counterclockwise neighbour lists, one per vertex.
    vertex_colors : sequence of int, optional
        Colours in ``1..m``.  Defaults to all ones (the uncoloured mode).
    edge_colors : mapping ``(i, j) -> int``, optional
        Keys are unordered; defaults to all ones.
    m : int, optional
        Number of colours; defaults to the largest colour used.
    """

    def __init__(self, rotation, vertex_colors=None, edge_colors=None, m: int | None = None):
        self.rotation: tuple[tuple[int, ...], ...] = tuple(tuple(int(v) for v in r) for r in rotation)
        self.n = len(self.rotation)
        self.vertex_colors: tuple[int, ...] = (
            tuple(int(c) for c in vertex_colors) if vertex_colors is not None else (1,) * self.n
        )
        ec = {}
        for i, r in enumerate(self.rotation):
            for j in r:
                ec[_edge(i, j)] = 1
        if edge_colors is not None:
            for (i, j), c in dict(edge_colors).items():
                ec[_edge(int(i), int(j))] = int(c)
        self.edge_colors: dict[tuple[int, int], int] = ec
        used = list(self.vertex_colors) + list(ec.values())
        self.m = int(m) if m is not None else max(used, default=1)
        self._succ = [{r[s]: r[(s + 1) % len(r)] for s in range(len(r))} for r in self.rotation]
        self._pred = [{r[(s + 1) % len(r)]: r[s] for s in range(len(r))} for r in self.rotation]

    # structure -----------------------------------------------------------
    @classmethod
    def from_faces(cls, n: int, faces: Iterable, vertex_colors=None, edge_colors=None, m=None) -> "ColorGraph":
        """Build from oriented triangles ``(i, a, b)`` meaning ``b = succ_i(a)``."""
        succ: list[dict[int, int]] = [dict() for _ in range(n)]
        for f in faces:
            a, b, c = (int(t) for t in f)
            for i, x, y in ((a, b, c), (b, c, a), (c, a, b)):
                if x in succ[i]:
                    raise NotTriangulable(f"dart {i}->{x} used twice")
                succ[i][x] = y
        rotation = []
        for i in range(n):
            if not succ[i]:
                rotation.append(())
                continue
            start = min(succ[i])
            cyc = [start]
            while True:
                nxt = succ[i][cyc[-1]]
                if nxt == start:
                    break
                if len(cyc) > len(succ[i]):
                    raise NotTriangulable(f"rotation at {i} is not a single cycle")
                cyc.append(nxt)
            if len(cyc) != len(succ[i]):
                raise NotTriangulable(f"rotation at {i} is not a single cycle")
            rotation.append(tuple(cyc))
        return cls(rotation, vertex_colors, edge_colors, m)

    def succ(self, i: int, a: int) -> int:
        return self._succ[i][a]

    def pred(self, i: int, a: int) -> int:
        return self._pred[i][a]

    def degree(self, i: int) -> int:
        return len(self.rotation[i])

    @property
    def degrees(self) -> list[int]:
        return [len(r) for r in self.rotation]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return sorted(self.edge_colors)

    def has_edge(self, i: int, j: int) -> bool:
        return _edge(i, j) in self.edge_colors

    def edge_color(self, i: int, j: int) -> int:
        return self.edge_colors[_edge(i, j)]

    def faces(self) -> list[tuple[int, int, int]]:
        """Oriented triangles, each listed once starting at its smallest vertex."""
        out = set()
        for i, r in enumerate(self.rotation):
            for a in r:
                tri = (i, a, self._succ[i][a])
                k = tri.index(min(tri))
                out.add(tri[k:] + tri[:k])
        return sorted(out)

    def face_orbits(self) -> list[list[tuple[int, int]]]:
        """Dart orbits under ``(i -> a)  |->  (a -> pred_a(i))``."""
        seen = set()
        orbits = []
        for i, r in enumerate(self.rotation):
            for a in r:
                if (i, a) in seen:
                    continue
                orb = []
                d = (i, a)
                while d not in seen:
                    seen.add(d)
                    orb.append(d)
                    u, v = d
                    d = (v, self._pred[v][u])
                orbits.append(orb)
        return orbits

    def is_uncolored(self) -> bool:
        return all(c == 1 for c in self.vertex_colors) and all(c == 1 for c in self.edge_colors.values())

    def relabeled(self, perm: list[int]) -> "ColorGraph":
        """Graph with vertex i renamed to ``perm[i]``."""
        rot = [None] * self.n
        vc = [0] * self.n
        for i in range(self.n):
            rot[perm[i]] = tuple(perm[j] for j in self.rotation[i])
            vc[perm[i]] = self.vertex_colors[i]
        ec = {_edge(perm[i], perm[j]): c for (i, j), c in self.edge_colors.items()}
        return ColorGraph(rot, vc, ec, self.m)

    def mirrored(self) -> "ColorGraph":
        return ColorGraph([tuple(reversed(r)) for r in self.rotation], self.vertex_colors, self.edge_colors, self.m)

    # io ------------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "vertex_colors": list(self.vertex_colors),
            "edges": [[i, j, c] for (i, j), c in sorted(self.edge_colors.items())],
            "rotation": [list(r) for r in self.rotation],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ColorGraph":
        ec = {(int(i), int(j)): int(c) for i, j, c in data.get("edges", [])}
        g = cls(data["rotation"], data.get("vertex_colors"), ec, data.get("m"))
        if g.n != int(data.get("n", g.n)):
            raise ValueError("vertex count does not match the rotation system")
        return g

    @classmethod
    def from_json(cls, text: str) -> "ColorGraph":
        return cls.from_dict(json.loads(text))

    def __repr__(self) -> str:
        return f"ColorGraph(n={self.n}, m={self.m}, degrees={self.degrees})"


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class GraphReport:
    ok: bool
    errors: tuple[str, ...]
    census: dict[int, int]


def validate(G: ColorGraph) -> GraphReport:
    """Check that G is a coloured triangulation of the sphere.

    Checks the rotation system, face closure, Euler counts ``e = 3(n - 2)`` and
    ``f = 2(n - 2)``, minimum degree three, the degree census identities
    ``sum w_j = n`` and ``sum j w_j = 6(n - 2)``, the existence of a vertex of
    degree at most five, and the colour ranges.
    """
    errs = []
    n = G.n
    census: dict[int, int] = {}
    for d in G.degrees:
        census[d] = census.get(d, 0) + 1
    if n < 4:
        errs.append("fewer than four vertices")
    for i, r in enumerate(G.rotation):
        if len(set(r)) != len(r):
            errs.append(f"repeated neighbour at {i}")
        for a in r:
            if a == i or not 0 <= a < n:
                errs.append(f"bad neighbour {a} at {i}")
            elif i not in G._succ[a]:
                errs.append(f"edge {i}-{a} missing at {a}")
    if errs:
        return GraphReport(False, tuple(errs), census)
    for i, r in enumerate(G.rotation):
        for a in r:
            b = G.succ(i, a)
            if a not in G._succ[b] or G.succ(a, b) != i or G.succ(b, i) != a:
                errs.append(f"face ({i},{a},{b}) does not close")
    e = len(G.edge_colors)
    orbits = G.face_orbits()
    f = len(orbits)
    if e != 3 * (n - 2):
        errs.append(f"edge count {e} != {3 * (n - 2)}")
    if f != 2 * (n - 2):
        errs.append(f"face count {f} != {2 * (n - 2)}")
    if n - e + f != 2:
        errs.append("Euler characteristic is not 2")
    if any(len(o) != 3 for o in orbits):
        errs.append("a face is not a triangle")
    if min(G.degrees) < 3:
        errs.append("minimum degree below three")
    if sum(census.values()) != n or sum(j * w for j, w in census.items()) != 6 * (n - 2):
        errs.append("degree census identities fail")
    if min(G.degrees) > 5:
        errs.append("no vertex of degree at most five")
    if any(not 1 <= c <= G.m for c in G.vertex_colors):
        errs.append("vertex colour out of range")
    if any(not 1 <= c <= G.m for c in G.edge_colors.values()):
        errs.append("edge colour out of range")
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for a in G.rotation[i]:
            if a not in seen:
                seen.add(a)
                queue.append(a)
    if len(seen) != n:
        errs.append("graph is disconnected")
    return GraphReport(not errs, tuple(errs), dict(sorted(census.items())))


# ---------------------------------------------------------------------------
# adjacency matrices


def adjacency_matrix(G: ColorGraph) -> np.ndarray:
    """Diagonal holds vertex colours, off-diagonal entries edge colours, zero for no edge."""
    M = np.zeros((G.n, G.n), dtype=int)
    for i, c in enumerate(G.vertex_colors):
        M[i, i] = c
    for (i, j), c in G.edge_colors.items():
        if c <= 0:
            raise ValueError(f"edge {i}-{j} has no colour")
        M[i, j] = M[j, i] = c
    return M


def matrix_to_csv(M: np.ndarray) -> str:
    return "".join(",".join(str(int(v)) for v in row) + "\n" for row in np.asarray(M))


def matrix_from_csv(text: str) -> np.ndarray:
    rows = [line for line in text.splitlines() if line.strip()]
    return np.array([[int(v) for v in line.replace(",", " ").split()] for line in rows], dtype=int)


def matrix_to_graph(M) -> ColorGraph:
    """Recover the coloured triangulation of an adjacency matrix.

    The embedding of a triangulation is unique up to reflection; it is
    recovered with a planarity test.
    """
    import networkx as nx

    M = np.asarray(M, dtype=int)
    n = M.shape[0]
    if M.shape != (n, n) or np.any(M != M.T):
        raise NotTriangulable("matrix must be square and symmetric")
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if M[i, j]:
                g.add_edge(i, j)
    if n < 4 or g.number_of_edges() != 3 * (n - 2):
        raise NotTriangulable("edge count is not 3(n - 2)")
    planar, emb = nx.check_planarity(g)
    if not planar:
        raise NotTriangulable("graph is not planar")
    rotation = [tuple(reversed(list(emb.neighbors_cw_order(i)))) for i in range(n)]
    ec = {(i, j): int(M[i, j]) for i, j in g.edges}
    G = ColorGraph(rotation, [int(M[i, i]) for i in range(n)], ec)
    rep = validate(G)
    if not rep.ok:
        raise NotTriangulable("; ".join(rep.errors))
    return G


# ---------------------------------------------------------------------------
# canonical form


def _code(G: ColorGraph, u: int, v: int, forward: bool) -> tuple[int, ...]:
    step = G._succ if forward else G._pred
    label = {u: 0}
    ref = {u: v}
    order = [u]
    out = []
    k = 0
    while k < len(order):
        x = order[k]
        k += 1
        out.append(G.vertex_colors[x])
        out.append(len(G.rotation[x]))
        start = ref[x]
        y = start
        while True:
            if y not in label:
                label[y] = len(order)
                ref[y] = x
                order.append(y)
            out.append(label[y])
            out.append(G.edge_colors[_edge(x, y)])
            y = step[x][y]
            if y == start:
                break
    return tuple(out)


def canonical_form(G: ColorGraph) -> str:
    """Isomorphism invariant key of a coloured triangulation.

    The minimum, over all starting darts and both orientations, of a
    breadth-first code that records degrees, colours and neighbour labels.
    Only darts with the lexicographically least local signature are tried.
    """
    best_sig = None
    starts = []
    for u, r in enumerate(G.rotation):
        for v in r:
            sig = (G.vertex_colors[u], len(r), G.edge_colors[_edge(u, v)], G.vertex_colors[v], len(G.rotation[v]))
            if best_sig is None or sig < best_sig:
                best_sig, starts = sig, [(u, v)]
            elif sig == best_sig:
                starts.append((u, v))
    best = None
    for u, v in starts:
        for forward in (True, False):
            c = _code(G, u, v, forward)
            if best is None or c < best:
                best = c
    return f"{G.n}:" + ".".join(map(str, best))


# ---------------------------------------------------------------------------
# graphs from packings and constraints


def graph_from_cell(cell: LocalCell, colored: bool = True) -> ColorGraph:
    """Dual graph of a simple local cell; vertex i - 1 stands for generator i."""
    cfg = cell.config
    n = cfg.n
    rotation = []
    for i in range(1, n + 1):
        rotation.append(tuple(j - 1 for j in cell.neighbors(i)))
    if not colored:
        return ColorGraph(rotation)
    body = cfg.body
    X = cfg.points
    vc = []
    for i in range(1, n + 1):
        f = body.facet_of(X[i])
        if f is None:
            raise NotGeneral(f"point {i} does not project into a facet interior")
        vc.append(body.color_of_facet(f))
    ec = {}
    for i, j in cell.adjacent_pairs():
        f = body.facet_of(X[i] - X[j])
        if f is None:
            raise NotGeneral(f"difference {i}-{j} does not project into a facet interior")
        ec[(i - 1, j - 1)] = body.color_of_facet(f)
    return ColorGraph(rotation, vc, ec, body.num_colors)


def graph_from_packing(cfg: PointConfig) -> ColorGraph:
    """Coloured graph of a general packing.

    Raises
    ------
    NotGeneral
    """
    cell = build_cell(cfg)
    cls = classify_packing(cfg, cell)
    if not cls.general:
        raise NotGeneral("; ".join(cls.reasons) or "packing is not general")
    return graph_from_cell(cell)


@dataclass(frozen=True)
class ConstraintRow:
    """``sign * normal . (sum_p coef_p x_p) >= bound``.

    ``points`` are graph vertices (vertex i is configuration point i + 1).
    ``sign`` is +1, -1 or 0 when not yet fixed; an unfixed row stands for the
    disjunction ``|normal . y| >= bound``.
    """

    kind: str
    points: tuple[int, ...]
    coefs: tuple[int, ...]
    normal: tuple[float, float, float]
    bound: float
    color: int
    sign: int = 0

    def form(self, X: np.ndarray) -> float:
        y = sum(c * X[p] for c, p in zip(self.coefs, self.points))
        return float(np.asarray(self.normal) @ y)

    def describe(self) -> str:
        names = "xyz"
        terms = []
        for c, p in zip(self.coefs, self.points):
            for k, a in enumerate(self.normal):
                v = c * a
                if v:
                    s = "+" if v > 0 else "-"
                    mag = "" if abs(v) == 1 else f"{abs(v):g}"
                    terms.append(f"{s}{mag}{names[k]}{p + 1}")
        text = "".join(terms).lstrip("+")
        return f"|{text}| >= {self.bound:g}"


@dataclass(frozen=True)
class ConstraintSet:
    body: str
    n: int
    rows: tuple[ConstraintRow, ...]

    def values(self, X: np.ndarray) -> np.ndarray:
        return np.array([r.form(X) for r in self.rows])

    def slacks(self, X: np.ndarray) -> np.ndarray:
        """``|form| - bound`` for every row."""
        return np.abs(self.values(X)) - np.array([r.bound for r in self.rows])

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Linear forms as a ``(rows, 3n)`` matrix and bounds."""
        G = np.zeros((len(self.rows), 3 * self.n))
        for r, row in enumerate(self.rows):
            for c, p in zip(row.coefs, row.points):
                G[r, 3 * p: 3 * p + 3] += c * np.asarray(row.normal)
        return G, np.array([row.bound for row in self.rows])

    def with_signs(self, X: np.ndarray) -> "ConstraintSet":
        vals = self.values(X)
        rows = tuple(
            ConstraintRow(r.kind, r.points, r.coefs, r.normal, r.bound, r.color, 1 if v >= 0 else -1)
            for r, v in zip(self.rows, vals)
        )
        return ConstraintSet(self.body, self.n, rows)


def constraints_from_graph(body: Body | str, G: ColorGraph) -> ConstraintSet:
    """One row per vertex and per edge of the coloured graph.

    A vertex of colour k gives ``|a_k . x_i| >= 2 tau_k`` and an edge of colour
    k gives ``|a_k . (x_i - x_j)| >= 2 tau_k`` where ``a_k . x <= tau_k`` is the
    first facet of the k-th opposite pair.
    """
    if isinstance(body, str):
        body = catalog(body)
    if G.m != body.num_colors or any(c > body.num_colors for c in G.vertex_colors):
        raise ColorCountMismatch(f"graph uses {G.m} colours, {body.name} has {body.num_colors} facet pairs")
    P = body.polytope
    rows = []
    for i, c in enumerate(G.vertex_colors):
        h = P.halfspaces[body.facet_of_color(c)]
        rows.append(ConstraintRow("vertex", (i,), (1,), h.normal, 2 * h.offset, c))
    for (i, j), c in sorted(G.edge_colors.items()):
        h = P.halfspaces[body.facet_of_color(c)]
        rows.append(ConstraintRow("edge", (i, j), (1, -1), h.normal, 2 * h.offset, c))
    return ConstraintSet(body.name, G.n, tuple(rows))

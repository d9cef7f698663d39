"""Local Voronoi cells of finite packing configurations.

A configuration is a list of translation vectors with the origin first.  The
local cell of the origin is the intersection of the bisector halfspaces
``x_i . p <= |x_i|^2 / 2`` over the remaining points.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bodies import Body, catalog
from .errors import DegenerateVertex, PerturbationFailed, UnboundedCell, UnboundedRegion
from .geometry import HalfSpace, Polytope, intersect_halfspaces

PACKING_TOL = 1e-9
DET_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PointConfig:
    """Packing configuration ``X = {o, x_1, ..., x_n}`` of translates of ``body``."""

    points: np.ndarray
    body: Body

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if len(P) == 0 or np.any(P[0] != 0.0):
            raise ValueError("points[0] must be the origin")
        if np.any(np.all(P[1:] == 0.0, axis=1)):
            raise ValueError("the origin may appear only once")
        if not np.all(np.isfinite(P)):
            raise ValueError("non-finite coordinates")
        object.__setattr__(self, "points", P)

    @classmethod
    def from_points(cls, points, body: Body | str) -> "PointConfig":
        """Build a configuration, prepending the origin when it is missing."""
        if isinstance(body, str):
            body = catalog(body)
        P = np.asarray(points, dtype=float).reshape(-1, 3)
        if len(P) == 0 or np.any(P[0] != 0.0):
            P = np.vstack([np.zeros(3), P])
        return cls(P, body)

    @property
    def n(self) -> int:
        """Number of points other than the origin."""
        return len(self.points) - 1

    @property
    def offsets(self) -> np.ndarray:
        """``d_i = |x_i|^2 / 2`` (zero for the origin)."""
        return 0.5 * np.sum(self.points ** 2, axis=1)

    def scaled(self, s: float) -> "PointConfig":
        return PointConfig(self.points * s, self.body)

    def to_dict(self) -> dict:
        return {"body": self.body.name, "points": self.points.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "PointConfig":
        return cls.from_points(data["points"], data["body"])

    @classmethod
    def from_json(cls, text: str) -> "PointConfig":
        return cls.from_dict(json.loads(text))


def check_packing(cfg: PointConfig, tol: float = PACKING_TOL) -> list[tuple[int, int, float]]:
    """Pairs ``(i, j)``, ``j < i``, whose translates overlap, with their gauge."""
    X = cfg.points
    out = []
    for i in range(1, len(X)):
        g = np.atleast_1d(cfg.body.gauge(X[i] - X[:i]))
        for j in np.flatnonzero(g < 2.0 - tol):
            out.append((i, int(j), float(g[j])))
    return out


@dataclass(frozen=True, eq=False)
class LocalCell:
    """The local cell ``Pi(X)``.

    ``faces`` maps every contributing generator index to its vertex cycle,
    counterclockwise as seen from that generator.  ``vertex_generators[v]`` is
    the sorted tuple of generators whose bisector planes pass through vertex v.
    """

    config: PointConfig
    polytope: Polytope
    vertices: np.ndarray
    faces: dict[int, tuple[int, ...]]
    vertex_generators: tuple[tuple[int, ...], ...]
    contributing: tuple[int, ...] = field(default=())

    @property
    def simple(self) -> bool:
        return all(len(g) == 3 for g in self.vertex_generators)

    def triples(self) -> list[tuple[int, ...]]:
        return sorted(self.vertex_generators)

    def neighbors(self, i: int) -> list[int]:
        """Generators sharing a cell edge with face i, in cycle order."""
        cyc = self.faces[i]
        out = []
        for s in range(len(cyc)):
            u, v = cyc[s], cyc[(s + 1) % len(cyc)]
            common = set(self.vertex_generators[u]) & set(self.vertex_generators[v])
            common.discard(i)
            if len(common) != 1:
                raise DegenerateVertex(f"edge {u}-{v} of face {i} is not shared by exactly two faces")
            out.append(common.pop())
        return out

    def adjacent_pairs(self) -> list[tuple[int, int]]:
        pairs = set()
        for i in self.faces:
            for j in self.neighbors(i):
                pairs.add((min(i, j), max(i, j)))
        return sorted(pairs)

    def volume(self) -> float:
        return cell_volume(self)

    def to_dict(self) -> dict:
        return {
            "body": self.config.body.name,
            "vertices": self.vertices.tolist(),
            "triples": [list(t) for t in self.vertex_generators],
            "faces": {str(i): list(c) for i, c in sorted(self.faces.items())},
            "volume": cell_volume(self),
        }


def build_cell(cfg: PointConfig) -> LocalCell:
    """Intersect the bisector halfspaces of a configuration.

    Raises
    ------
    UnboundedCell
        if the points do not surround the origin.
    DegenerateVertex
        if a simple vertex comes from a nearly singular triple of generators.
    """
    X = cfg.points
    hs = [HalfSpace(tuple(X[i]), float(X[i] @ X[i]) / 2) for i in range(1, len(X))]
    try:
        P = intersect_halfspaces(hs)
    except UnboundedRegion as exc:
        raise UnboundedCell(str(exc)) from exc
    used = sorted({f.halfspace for f in P.faces})
    if len(used) < len(hs):
        # recompute from the contributing bisectors alone so that points
        # without a face have no influence on the result, not even rounding
        P = intersect_halfspaces([hs[k] for k in used])
        P = Polytope(tuple(hs), P.vertices, tuple(f._replace(halfspace=used[f.halfspace]) for f in P.faces),
                     tuple((used[i], used[j]) for i, j in P.face_pairs))
    d = cfg.offsets
    V = P.vertices
    faces = {f.halfspace + 1: f.cycle for f in P.faces}
    gens = []
    for v in V:
        res = np.abs(X[1:] @ v - d[1:]) / np.linalg.norm(X[1:], axis=1)
        on = tuple(int(k) + 1 for k in np.flatnonzero(res <= 1e-9 * max(1.0, float(np.max(d)))))
        on = tuple(k for k in on if k in faces)
        if len(on) == 3:
            det = np.linalg.det(X[list(on)])
            if abs(det) <= DET_TOL:
                raise DegenerateVertex(f"triple {on} has determinant {det:g}")
        gens.append(on)
    return LocalCell(cfg, P, V, faces, tuple(gens), tuple(sorted(faces)))


def face_area(points: np.ndarray) -> float:
    """Area of a planar convex polygon by a fan of n - 2 triangles from its first vertex."""
    p0 = points[0]
    area = 0.0
    for s in range(1, len(points) - 1):
        a, b = points[s] - p0, points[s + 1] - p0
        g = (a @ a) * (b @ b) - (a @ b) ** 2
        area += 0.5 * np.sqrt(max(g, 0.0))
    return float(area)


def cell_volume(cell: LocalCell) -> float:
    """Sum of the pyramids over the faces: ``sum (1/3) h_i area(Q_i)`` with ``h_i = |x_i| / 2``."""
    X = cell.config.points
    total = 0.0
    for i, cyc in cell.faces.items():
        h = 0.5 * np.linalg.norm(X[i])
        total += h * face_area(cell.vertices[list(cyc)]) / 3.0
    return float(total)


@dataclass(frozen=True)
class PackingClass:
    reduced: bool
    general: bool
    simple: bool
    noncontributing: tuple[int, ...]
    point_facets: tuple[int | None, ...]
    adjacent_pairs: tuple[tuple[int, int], ...]
    adjacent_pair_facets: tuple[int | None, ...]
    all_pairs_general: bool
    reasons: tuple[str, ...]


def classify_packing(cfg: PointConfig, cell: LocalCell | None = None) -> PackingClass:
    """Decide whether a packing is reduced and general.

    A packing is reduced when every point contributes a face to the cell.  It
    is general when moreover every vertex is simple and every x_i, as well as
    every difference of face-adjacent points, projects into the relative
    interior of a unique facet.  Whether all pairwise differences do so is
    reported separately in ``all_pairs_general``.
    """
    cell = cell or build_cell(cfg)
    body = cfg.body
    X = cfg.points
    non = tuple(i for i in range(1, len(X)) if i not in cell.faces)
    reduced = not non
    simple = cell.simple
    reasons = []
    if not reduced:
        reasons.append(f"points {list(non)} contribute no face")
    if not simple:
        reasons.append("the cell has a vertex of degree above three")
    pairs: tuple[tuple[int, int], ...] = ()
    try:
        pairs = tuple(cell.adjacent_pairs()) if simple else ()
    except DegenerateVertex:
        simple = False
    if body.is_polytope:
        pf = tuple(body.facet_of(X[i]) if i else None for i in range(len(X)))
        ef = tuple(body.facet_of(X[i] - X[j]) for i, j in pairs)
        pts_ok = all(f is not None for f in pf[1:])
        pairs_ok = all(f is not None for f in ef)
        all_ok = all(
            body.facet_of(X[i] - X[j]) is not None for i in range(1, len(X)) for j in range(1, i)
        )
        if not pts_ok:
            reasons.append("a point projects onto a lower dimensional face")
        if not pairs_ok:
            reasons.append("an adjacent difference projects onto a lower dimensional face")
    else:
        pf = tuple(None for _ in range(len(X)))
        ef = tuple(None for _ in pairs)
        pts_ok = pairs_ok = all_ok = True
    general = reduced and simple and pts_ok and pairs_ok
    return PackingClass(reduced, general, simple, non, pf, pairs, ef, all_ok, tuple(reasons))


def perturb_to_general(cfg: PointConfig, eps: float, seed: int = 0, max_attempts: int = 1000) -> PointConfig:
    """Scale by ``1 + eps`` and jitter each point by at most ``eps^2 |x_i|``.

    The result stays a packing, is general, and moves each point by at most
    ``eps (1 + max |x|)``.
    """
    if not 0.0 < eps <= 0.1:
        raise ValueError("eps must lie in (0, 0.1]")
    rng = np.random.default_rng(seed)
    X = cfg.points
    norms = np.linalg.norm(X, axis=1)
    cap = eps * (1.0 + norms.max())
    radius = np.minimum(eps * eps * norms, np.maximum(cap - eps * norms, 0.0))
    base = X * (1.0 + eps)
    for _ in range(max_attempts):
        J = rng.normal(size=X.shape)
        J /= np.maximum(np.linalg.norm(J, axis=1), 1e-300)[:, None]
        J *= (radius * rng.random(len(X)) ** (1 / 3))[:, None]
        J[0] = 0.0
        cand = PointConfig(base + J, cfg.body)
        if check_packing(cand):
            continue
        try:
            if classify_packing(cand).general:
                return cand
        except (UnboundedCell, DegenerateVertex):
            continue
    raise PerturbationFailed(f"no general perturbation found in {max_attempts} attempts")


# Example configurations -------------------------------------------------------

_EX_O = [
    (2, 3, 1), (4, 1, -1), (2, -2, -2), (3, -1, 2), (1, 1, 4),
    (-1, -2, 3), (1, -4, 1), (-2, -3, -1), (-1, -1, -4), (1, 2, -3),
    (-1, 4, -1), (-3, 1, -2), (-4, -1, 1), (-2, 2, 2),
]
_EX_C = [
    (6, 1, 1), (2, 5, 5), (-4, 4, 4), (1, -1, 6), (5, -5, 2),
    (-1, -6, 1), (-5, -2, 5), (-6, -1, -1), (-5, 5, -2), (1, 6, -1),
    (5, 2, -5), (-1, 1, -6), (-2, -5, -5), (4, -4, -4),
]


def example_config(name: str) -> PointConfig:
    """The fourteen-neighbour lattice configurations for ``"O"`` and ``"C"``."""
    rows = {"O": _EX_O, "C": _EX_C}[name]
    return PointConfig.from_points(np.array(rows, dtype=float) / 3.0, name)

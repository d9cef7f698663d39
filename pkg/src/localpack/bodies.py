"""Catalog of convex bodies, difference bodies, cores and lattice cells."""
from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SingularBasis, UnknownBody
from .geometry import (
    HalfSpace,
    Polytope,
    convex_hull_polytope,
    intersect_halfspaces,
    polytope_volume,
)

FACET_MARGIN = 1e-9

R1 = math.sqrt(2033) / 57
R2 = math.sqrt(830) / 21


@dataclass(frozen=True)
class Ball:
    radius: float = 1.0

    @property
    def volume(self) -> float:
        return 4.0 * math.pi / 3.0 * self.radius ** 3


@dataclass(frozen=True, eq=False)
class Body:
    """A centred convex body.

    ``shape`` is a :class:`Polytope`, a :class:`Ball`, or ``None`` for entries
    that only carry combinatorial metadata.  ``pair_colors[p]`` is the colour
    number attached to the p-th pair of opposite facets; by default pair p gets
    colour p + 1.
    """

    name: str
    shape: Polytope | Ball | None
    volume: float | None
    steiner: tuple[float, float] | None = None
    counts: tuple[int, int, int] | None = None
    pair_colors: tuple[int, ...] | None = None
    aliases: tuple[str, ...] = field(default=())

    @property
    def is_polytope(self) -> bool:
        return isinstance(self.shape, Polytope)

    @property
    def is_ball(self) -> bool:
        return isinstance(self.shape, Ball)

    @property
    def polytope(self) -> Polytope:
        if not self.is_polytope:
            raise TypeError(f"{self.name} has no polytope model")
        return self.shape

    @property
    def num_colors(self) -> int:
        return len(self.polytope.face_pairs)

    def gauge(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_ball:
            vals = np.linalg.norm(x.reshape(-1, 3), axis=1) / self.shape.radius
        else:
            P = self.polytope
            vals = np.maximum((x.reshape(-1, 3) @ P.A.T / P.b).max(axis=1), 0.0)
        return float(vals[0]) if x.ndim == 1 else vals

    def contains(self, x, tol: float = 1e-9):
        return self.gauge(x) <= 1.0 + tol

    def support(self, u) -> np.ndarray | float:
        u = np.asarray(u, dtype=float)
        if self.is_ball:
            vals = self.shape.radius * np.linalg.norm(u.reshape(-1, 3), axis=1)
        else:
            vals = (u.reshape(-1, 3) @ self.polytope.vertices.T).max(axis=1)
        return float(vals[0]) if u.ndim == 1 else vals

    def facet_ratios(self, x) -> np.ndarray:
        P = self.polytope
        return np.asarray(x, dtype=float) @ P.A.T / P.b

    def facet_of(self, x, margin: float = FACET_MARGIN) -> int | None:
        """Index of the facet whose relative interior the ray through x meets.

        Returns ``None`` when the ray meets a lower dimensional face, that is
        when the two largest ratios ``a_k . x / tau_k`` are within ``margin``
        (relative) of each other.
        """
        r = self.facet_ratios(x)
        order = np.argsort(r)[::-1]
        top, second = r[order[0]], r[order[1]]
        if top <= 0 or top - second <= margin * max(1.0, abs(top)):
            return None
        return int(order[0])

    def pair_of_facet(self, f: int) -> int:
        for p, (i, j) in enumerate(self.polytope.face_pairs):
            if f in (i, j):
                return p
        raise ValueError(f"facet {f} is not paired")

    def color_of_facet(self, f: int) -> int:
        p = self.pair_of_facet(f)
        return self.pair_colors[p] if self.pair_colors else p + 1

    def facet_of_color(self, color: int) -> int:
        """First facet of the opposite pair carrying ``color``."""
        for p, (i, _) in enumerate(self.polytope.face_pairs):
            c = self.pair_colors[p] if self.pair_colors else p + 1
            if c == color:
                return i
        raise ValueError(f"colour {color} not used by {self.name}")

    def summary(self) -> dict:
        out = {"name": self.name, "volume": self.volume}
        if self.steiner:
            out["surface_area"], out["mean_width_coefficient"] = self.steiner
        if self.counts:
            out["vertices"], out["edges"], out["faces"] = self.counts
        if self.is_polytope:
            out["facet_pairs"] = len(self.polytope.face_pairs)
            out["halfspaces"] = [list(h.normal) + [h.offset] for h in self.polytope.halfspaces]
        if self.is_ball:
            out["radius"] = self.shape.radius
        return out


def _signed(rows, offsets):
    hs = [HalfSpace(r, t) for r, t in zip(rows, offsets)]
    hs += [HalfSpace(tuple(-c for c in r), t) for r, t in zip(rows, offsets)]
    return intersect_halfspaces(hs)


def _octahedron() -> Body:
    rows = [(1, 1, 1), (-1, 1, 1), (1, -1, 1), (1, 1, -1)]
    P = _signed(rows, [1.0] * 4)
    S, M = 4 * math.sqrt(3), 6 * math.sqrt(2) * math.acos(1 / 3)
    return Body("O", P, polytope_volume(P), (S, M), P.counts(), aliases=("octahedron",))


def _cuboctahedron() -> Body:
    rows = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1), (-1, 1, 1), (1, -1, 1), (1, 1, -1)]
    P = _signed(rows, [1.0] * 3 + [2.0] * 4)
    S, M = 12 + 4 * math.sqrt(3), 12 * math.sqrt(2) * math.acos(math.sqrt(1 / 3))
    # Colours 5 and 6 are attached to the pairs of x-y+z and -x+y+z respectively,
    # which is the labelling under which the printed colour matrix is reproduced.
    colors = (1, 2, 3, 4, 6, 5, 7)
    return Body("C", P, polytope_volume(P), (S, M), P.counts(), colors, aliases=("cuboctahedron",))


def _cube() -> Body:
    P = _signed([(1, 0, 0), (0, 1, 0), (0, 0, 1)], [1.0] * 3)
    return Body("Q", P, 8.0, (24.0, 6 * math.pi), P.counts(), aliases=("cube",))


def _tetrahedron() -> Body:
    pts = np.array([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)], dtype=float) / (2 * math.sqrt(2))
    P = convex_hull_polytope(pts)
    S = math.sqrt(3)
    M = 6 * 1.0 * (math.pi - math.acos(1 / 3)) / 2
    return Body("T", P, polytope_volume(P), (S, M), P.counts(), aliases=("tetrahedron",))


def _ball() -> Body:
    return Body("B", Ball(1.0), 4 * math.pi / 3, (4 * math.pi, 4 * math.pi), aliases=("ball",))


def _hexagonal_prism() -> Body:
    rows, offs = [], []
    for k in range(3):
        t = math.pi / 6 + k * math.pi / 3
        rows.append((math.cos(t), math.sin(t), 0.0))
        offs.append(math.sqrt(3) / 2)
    rows.append((0.0, 0.0, 1.0))
    offs.append(1.0)
    P = _signed(rows, offs)
    return Body("hexagonal-prism", P, polytope_volume(P), None, (12, 18, 8))


def _rhombic_dodecahedron() -> Body:
    rows = [(1, 1, 0), (1, -1, 0), (0, 1, 1), (0, 1, -1), (1, 0, 1), (1, 0, -1)]
    P = _signed(rows, [1.0] * 6)
    return Body("rhombic-dodecahedron", P, polytope_volume(P), None, (14, 24, 12))


def _truncated_octahedron() -> Body:
    rows = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1), (-1, 1, 1), (1, -1, 1), (1, 1, -1)]
    P = _signed(rows, [2.0] * 3 + [3.0] * 4)
    return Body("truncated-octahedron", P, polytope_volume(P), None, (24, 36, 14))


def _elongated_octahedron() -> Body:
    return Body("elongated-octahedron", None, None, None, (18, 28, 12))


_BUILDERS: dict[str, Callable[[], Body]] = {
    "T": _tetrahedron,
    "O": _octahedron,
    "C": _cuboctahedron,
    "B": _ball,
    "Q": _cube,
    "hexagonal-prism": _hexagonal_prism,
    "rhombic-dodecahedron": _rhombic_dodecahedron,
    "elongated-octahedron": _elongated_octahedron,
    "truncated-octahedron": _truncated_octahedron,
}

_ALIASES = {
    "tetrahedron": "T",
    "octahedron": "O",
    "cuboctahedron": "C",
    "ball": "B",
    "cube": "Q",
}


def body_names() -> list[str]:
    return list(_BUILDERS)


@functools.lru_cache(maxsize=None)
def _build(key: str) -> Body:
    return _BUILDERS[key]()


def catalog(name: str) -> Body:
    """Look up a catalog body by name (single letters are case sensitive)."""
    key = name.strip()
    if key not in _BUILDERS:
        low = key.lower().replace("_", "-").replace(" ", "-")
        key = _ALIASES.get(low, low)
    if key not in _BUILDERS:
        raise UnknownBody(name)
    return _build(key)


def catalog_index() -> str:
    """JSON index of the catalog."""
    rows = []
    for key in _BUILDERS:
        b = catalog(key)
        rows.append({"name": b.name, "volume": b.volume, "counts": list(b.counts) if b.counts else None,
                     "model": "ball" if b.is_ball else ("polytope" if b.is_polytope else None)})
    return json.dumps(rows, sort_keys=True)


def difference_body(body: Body) -> Body:
    """``K - K``, the hull of all pairwise differences of vertices."""
    if body.is_ball:
        b = Ball(2 * body.shape.radius)
        return Body(f"D({body.name})", b, b.volume)
    V = body.polytope.vertices
    diffs = (V[:, None, :] - V[None, :, :]).reshape(-1, 3)
    P = convex_hull_polytope(diffs)
    return Body(f"D({body.name})", P, polytope_volume(P), None, P.counts())


def scaled(body: Body, s: float) -> Body:
    if body.is_ball:
        b = Ball(body.shape.radius * s)
        return Body(f"{s}*{body.name}", b, b.volume)
    P = body.polytope
    hs = [HalfSpace(h.normal, h.offset * s) for h in P.halfspaces]
    Q = intersect_halfspaces(hs)
    st = None
    if body.steiner:
        st = (body.steiner[0] * s * s, body.steiner[1] * s)
    return Body(f"{s}*{body.name}", Q, polytope_volume(Q), st, Q.counts(), body.pair_colors)


# ---------------------------------------------------------------------------
# cores


def core_extent(body: Body, u) -> np.ndarray | float:
    """Radial extent of the core of ``body`` along unit directions ``u``.

    A point x lies in the core exactly when the ball with diameter [o, x] fits
    in the body, so along a unit direction u the extent is
    ``min_k 2 tau_k / (a_k . u + |a_k|)``.
    """
    u = np.asarray(u, dtype=float)
    U = u.reshape(-1, 3)
    U = U / np.linalg.norm(U, axis=1)[:, None]
    if body.is_ball:
        out = np.full(len(U), body.shape.radius)
    else:
        P = body.polytope
        A, b = P.A, P.b
        out = (2 * b[None, :] / (U @ A.T + np.linalg.norm(A, axis=1)[None, :])).min(axis=1)
    return float(out[0]) if u.ndim == 1 else out


def core_contains(body: Body, y, tol: float = 0.0) -> np.ndarray:
    y = np.atleast_2d(np.asarray(y, dtype=float))
    r = np.linalg.norm(y, axis=1)
    if body.is_ball:
        return r <= body.shape.radius + tol
    P = body.polytope
    A, b = P.A, P.b
    lhs = y @ A.T + np.linalg.norm(A, axis=1)[None, :] * r[:, None]
    return np.all(lhs <= 2 * b[None, :] + tol, axis=1)


def boundary_samples(body: Body, count: int, rng: np.random.Generator) -> np.ndarray:
    """Points on the boundary: random directions scaled by the gauge."""
    U = rng.normal(size=(count, 3))
    U /= np.linalg.norm(U, axis=1)[:, None]
    return U / np.asarray(body.gauge(U))[:, None]


def sampled_core_extent(body: Body, u, samples: int = 10000, seed: int = 0) -> np.ndarray:
    """Core extent approximated from boundary samples ``y``.

    Uses the bisector description ``<x, y> <= |y|^2`` for every sampled y.
    """
    rng = np.random.default_rng(seed)
    Y = boundary_samples(body, samples, rng)
    if body.is_polytope:
        Y = np.vstack([Y, body.polytope.vertices])
    U = np.atleast_2d(np.asarray(u, dtype=float))
    U = U / np.linalg.norm(U, axis=1)[:, None]
    dots = U @ Y.T
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dots > 0, (Y * Y).sum(axis=1)[None, :] / dots, np.inf)
    return ratio.min(axis=1)


def _gamma_cube(x):
    w = np.linalg.norm(x, axis=-1)
    return 2.0 / (1.0 + w)


def _gamma_octahedron(x):
    w = np.linalg.norm(x, axis=-1)
    return 2.0 / (1.0 + math.sqrt(3) * w)


def _gamma_ball(x):
    return np.ones(np.shape(x)[:-1])


def _gamma_cuboctahedron(x):
    x = np.asarray(x, dtype=float)
    w = np.linalg.norm(x, axis=-1)
    v = np.max(np.abs(x), axis=-1)
    square = v >= 1.0 - 1e-12
    low = (2 - math.sqrt(3)) * w + 2 * v <= 2.0
    tri = np.where(low, 4.0 / (2.0 + math.sqrt(3) * w), 2.0 / (w + v))
    return np.where(square, 2.0 / (w + 1.0), tri)


_CLOSED_FORMS = {"Q": _gamma_cube, "O": _gamma_octahedron, "B": _gamma_ball, "C": _gamma_cuboctahedron}


@dataclass(frozen=True, eq=False)
class CoreFunction:
    """The core ``K'`` given through a scale on the boundary of K.

    ``scale(x)`` for a boundary point x returns gamma with gamma * x on the
    boundary of the core.  ``closed_form`` tells whether a tabulated formula
    is used; otherwise the exact facet description of :func:`core_extent`.
    """

    body: Body
    closed_form: bool

    def scale(self, x):
        x = np.asarray(x, dtype=float)
        if self.closed_form:
            out = np.asarray(_CLOSED_FORMS[self.body.name](x), dtype=float)
        else:
            X = x.reshape(-1, 3)
            out = np.asarray(core_extent(self.body, X)) / np.linalg.norm(X, axis=1)
            out = out.reshape(x.shape[:-1])
        return float(out) if out.ndim == 0 else out

    def extent(self, u):
        return core_extent(self.body, u)

    def contains(self, y, tol: float = 0.0):
        return core_contains(self.body, y, tol)


def core(body: Body) -> CoreFunction:
    return CoreFunction(body, body.name in _CLOSED_FORMS)


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True, eq=False)
class Lattice:
    basis: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float).reshape(3, 3)
        object.__setattr__(self, "basis", B)

    @property
    def det(self) -> float:
        return float(abs(np.linalg.det(self.basis)))

    def points_within(self, radius: float) -> np.ndarray:
        B = self.basis
        if abs(np.linalg.det(B)) <= 1e-12:
            raise SingularBasis("lattice basis is singular")
        Binv = np.linalg.inv(B)
        bound = np.ceil(radius * np.linalg.norm(Binv, axis=0)).astype(int)
        ranges = [range(-k, k + 1) for k in bound]
        coeffs = np.array(list(itertools.product(*ranges)), dtype=float)
        pts = coeffs @ B
        r = np.linalg.norm(pts, axis=1)
        keep = (r <= radius + 1e-12) & (r > 0)
        return pts[keep]

    def to_json(self) -> str:
        return json.dumps(self.basis.tolist())


LAMBDA_1 = Lattice(np.array([[2 / 3, 1, 1 / 3], [1 / 3, 2 / 3, -1], [4 / 3, 1 / 3, -1 / 3]]))
LAMBDA_2 = Lattice(np.array([[2, 1 / 3, 1 / 3], [2 / 3, 5 / 3, 5 / 3], [1 / 3, -1 / 3, 2]]))
Z3 = Lattice(np.eye(3))


@dataclass(frozen=True, eq=False)
class LatticeCell:
    polytope: Polytope
    volume: float
    density: float | None
    body: str | None


def lattice_cell(lattice: Lattice | np.ndarray, body: Body | str | None = None) -> LatticeCell:
    """Voronoi cell of the origin in a lattice and the packing density of ``body``.

    The cell is cut from the bisectors of all lattice points within three times
    the longest basis vector.
    """
    L = lattice if isinstance(lattice, Lattice) else Lattice(lattice)
    if abs(np.linalg.det(L.basis)) <= 1e-12:
        raise SingularBasis("lattice basis is singular")
    radius = 3.0 * float(np.max(np.linalg.norm(L.basis, axis=1)))
    pts = L.points_within(radius)
    P = intersect_halfspaces([HalfSpace(tuple(p), float(p @ p) / 2) for p in pts])
    vol = polytope_volume(P)
    if isinstance(body, str):
        body = catalog(body)
    density = body.volume / L.det if body is not None else None
    return LatticeCell(P, vol, density, body.name if body is not None else None)

"""Convex polytopes in R^3 given by halfspaces.

A polytope is stored as its halfspaces ``a . x <= tau`` together with the
vertex list and, for every halfspace that supports a two dimensional face,
the cycle of vertex indices bounding that face.  Cycles run counterclockwise
when the face is viewed from outside the polytope.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .errors import DegenerateFace, EmptyInterior, MissingSteinerData, UnboundedRegion

TOL = 1e-9
DET_TOL = 1e-12


@dataclass(frozen=True)
class HalfSpace:
    """The closed halfspace ``{x : normal . x <= offset}``."""

    normal: tuple[float, float, float]
    offset: float

    def __post_init__(self):
        a = np.asarray(self.normal, dtype=float)
        if a.shape != (3,) or not np.all(np.isfinite(a)) or not math.isfinite(self.offset):
            raise ValueError(f"bad halfspace {self.normal!r}, {self.offset!r}")
        if np.linalg.norm(a) == 0.0:
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", tuple(float(t) for t in a))
        object.__setattr__(self, "offset", float(self.offset))

    def evaluate(self, x) -> np.ndarray:
        """Return ``normal . x - offset`` (negative inside)."""
        return np.asarray(x, dtype=float) @ np.asarray(self.normal) - self.offset


class Face(NamedTuple):
    halfspace: int
    cycle: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Polytope:
    halfspaces: tuple[HalfSpace, ...]
    vertices: np.ndarray
    faces: tuple[Face, ...]
    face_pairs: tuple[tuple[int, int], ...] = ()

    @property
    def A(self) -> np.ndarray:
        return np.array([h.normal for h in self.halfspaces], dtype=float)

    @property
    def b(self) -> np.ndarray:
        return np.array([h.offset for h in self.halfspaces], dtype=float)

    @property
    def edges(self) -> list[tuple[int, int]]:
        out = set()
        for f in self.faces:
            c = f.cycle
            for s in range(len(c)):
                u, v = c[s], c[(s + 1) % len(c)]
                out.add((min(u, v), max(u, v)))
        return sorted(out)

    def counts(self) -> tuple[int, int, int]:
        """(vertices, edges, faces)."""
        return len(self.vertices), len(self.edges), len(self.faces)

    def face_of(self, k: int) -> Face | None:
        for f in self.faces:
            if f.halfspace == k:
                return f
        return None

    def contains(self, x, tol: float = TOL) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        A, b = self.A, self.b
        nrm = np.linalg.norm(A, axis=1)
        return np.all((x @ A.T - b) / nrm <= tol, axis=1)

    def volume(self) -> float:
        return polytope_volume(self)

    def to_dict(self) -> dict:
        return {
            "halfspaces": [list(h.normal) + [h.offset] for h in self.halfspaces],
            "vertices": self.vertices.tolist(),
            "faces": [{"halfspace": f.halfspace, "cycle": list(f.cycle)} for f in self.faces],
            "face_pairs": [list(p) for p in self.face_pairs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "Polytope":
        hs = tuple(HalfSpace(tuple(row[:3]), row[3]) for row in data["halfspaces"])
        faces = tuple(Face(int(f["halfspace"]), tuple(int(i) for i in f["cycle"])) for f in data["faces"])
        pairs = tuple((int(p[0]), int(p[1])) for p in data.get("face_pairs", []))
        verts = np.asarray(data["vertices"], dtype=float).reshape(-1, 3)
        return cls(hs, verts, faces, pairs)

    @classmethod
    def from_json(cls, text: str) -> "Polytope":
        return cls.from_dict(json.loads(text))


def _as_halfspaces(hs) -> tuple[HalfSpace, ...]:
    out = []
    for h in hs:
        if isinstance(h, HalfSpace):
            out.append(h)
        else:
            row = list(h)
            if len(row) == 2:
                out.append(HalfSpace(tuple(row[0]), row[1]))
            else:
                out.append(HalfSpace(tuple(row[:3]), row[3]))
    return tuple(out)


def _check_bounded(A: np.ndarray) -> None:
    # Bounded iff the normals span R^3 and some strictly positive combination
    # of them vanishes (Stiemke's alternative).
    if A.shape[0] < 4 or np.linalg.matrix_rank(A) < 3:
        raise UnboundedRegion("normals do not positively span R^3")
    m = A.shape[0]
    res = linprog(np.zeros(m), A_eq=A.T, b_eq=np.zeros(3), bounds=[(1.0, None)] * m, method="highs")
    if res.status != 0:
        raise UnboundedRegion("the halfspaces leave a recession direction")


def _chebyshev_center(An: np.ndarray, bn: np.ndarray) -> tuple[np.ndarray, float]:
    m = An.shape[0]
    c = np.zeros(4)
    c[3] = -1.0
    A_ub = np.hstack([An, np.ones((m, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=bn, bounds=[(None, None)] * 3 + [(0, None)], method="highs")
    if res.status != 0:
        raise EmptyInterior("halfspace system is infeasible")
    return res.x[:3], float(res.x[3])


def _vertices_by_hull(An: np.ndarray, bn: np.ndarray) -> np.ndarray:
    dual = An / bn[:, None]
    try:
        hull = ConvexHull(dual)
    except QhullError as exc:  # pragma: no cover - guarded by _check_bounded
        raise UnboundedRegion(str(exc)) from exc
    eq = hull.equations
    return eq[:, :3] / (-eq[:, 3])[:, None]


def _vertices_by_triples(An: np.ndarray, bn: np.ndarray) -> np.ndarray:
    m = An.shape[0]
    idx = np.array(list(itertools.combinations(range(m), 3)), dtype=int)
    out = []
    for chunk in np.array_split(idx, max(1, len(idx) // 20000 + 1)):
        M = An[chunk]
        det = np.linalg.det(M)
        ok = np.abs(det) > DET_TOL
        if not np.any(ok):
            continue
        sol = np.linalg.solve(M[ok], bn[chunk[ok]][..., None])[..., 0]
        feas = np.all(sol @ An.T - bn <= TOL, axis=1)
        out.append(sol[feas])
    if not out:
        return np.zeros((0, 3))
    return np.vstack(out)


def _merge_points(P: np.ndarray, tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for p in P[np.lexsort(P.T[::-1])]:
        if kept and np.min(np.max(np.abs(np.asarray(kept) - p), axis=1)) <= tol:
            continue
        kept.append(p)
    return np.array(kept).reshape(-1, 3)


def _refine(P: np.ndarray, An: np.ndarray, bn: np.ndarray) -> np.ndarray:
    out = np.empty_like(P)
    for r, p in enumerate(P):
        tight = np.abs(An @ p - bn) <= 1e-7 * max(1.0, float(np.max(np.abs(bn))))
        if np.count_nonzero(tight) >= 3 and np.linalg.matrix_rank(An[tight]) == 3:
            out[r] = np.linalg.lstsq(An[tight], bn[tight], rcond=None)[0]
        else:
            out[r] = p
    return out


def _order_cycle(idx: Sequence[int], V: np.ndarray, normal: np.ndarray) -> tuple[int, ...]:
    pts = V[list(idx)]
    c = pts.mean(axis=0)
    n = normal / np.linalg.norm(normal)
    e1 = pts[0] - c
    e1 = e1 - (e1 @ n) * n
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    d = pts - c
    ang = np.arctan2(d @ e2, d @ e1)
    order = np.argsort(ang, kind="stable")
    return tuple(int(idx[i]) for i in order)


def _symmetric_pairs(An: np.ndarray, bn: np.ndarray) -> tuple[tuple[int, int], ...]:
    m = len(bn)
    match = (np.abs(An[:, None, :] + An[None, :, :]).max(axis=2) <= 1e-12) & (
        np.abs(bn[:, None] - bn[None, :]) <= 1e-12
    )
    pairs = []
    used = set()
    for i in range(m):
        if i in used:
            continue
        for j in np.flatnonzero(match[i]):
            j = int(j)
            if j > i and j not in used:
                pairs.append((i, j))
                used.update((i, j))
                break
    if 2 * len(pairs) != m:
        return ()
    return tuple(pairs)


def intersect_halfspaces(hs: Iterable, method: str = "hull") -> Polytope:
    """Intersect closed halfspaces into a bounded polytope.

    Parameters
    ----------
    hs : iterable of HalfSpace or ``(a, b, c, tau)`` rows
    method : {"hull", "triples"}
        ``"hull"`` finds candidate vertices from the convex hull of the polar
        points ``a_k / tau_k``; ``"triples"`` solves every triple of boundary
        planes.  Both routes share the refinement and face assembly steps.

    Raises
    ------
    UnboundedRegion, EmptyInterior
    """
    hs = _as_halfspaces(hs)
    A = np.array([h.normal for h in hs], dtype=float)
    b = np.array([h.offset for h in hs], dtype=float)
    norms = np.linalg.norm(A, axis=1)
    An, bn = A / norms[:, None], b / norms
    _check_bounded(An)
    center, radius = _chebyshev_center(An, bn)
    scale = max(1.0, float(np.max(np.abs(bn))))
    if radius <= TOL * scale:
        raise EmptyInterior("the intersection has empty interior")
    bs = bn - An @ center
    if method == "hull":
        cand = _vertices_by_hull(An, bs)
    elif method == "triples":
        cand = _vertices_by_triples(An, bs)
    else:
        raise ValueError(f"unknown method {method!r}")
    cand = cand[np.all(cand @ An.T - bs <= 1e-7 * scale, axis=1)]
    V = _merge_points(_refine(cand, An, bs), TOL * scale)
    V = _merge_points(_refine(V, An, bs), TOL * scale)

    faces = []
    same = (np.abs(An[:, None, :] - An[None, :, :]).max(axis=2) <= 1e-12) & (
        np.abs(bs[:, None] - bs[None, :]) <= 1e-12
    )
    for k in range(len(hs)):
        if np.any(same[k, :k]):
            continue
        on = np.flatnonzero(np.abs(V @ An[k] - bs[k]) <= TOL * scale)
        if len(on) < 3:
            continue
        rel = V[on] - V[on].mean(axis=0)
        if np.linalg.matrix_rank(rel, tol=TOL * scale) < 2:
            continue
        faces.append(Face(k, _order_cycle(on, V, An[k])))
    V = V + center
    return Polytope(hs, V, tuple(faces), _symmetric_pairs(An, bn))


def convex_hull_polytope(points) -> Polytope:
    """Polytope spanned by a finite point set (the origin need not be inside)."""
    P = np.asarray(points, dtype=float)
    hull = ConvexHull(P)
    rows = []
    for eq in hull.equations:
        n, off = eq[:3], -eq[3]
        if not any(np.allclose(n, r[:3], atol=1e-10) and abs(off - r[3]) <= 1e-10 for r in rows):
            rows.append(np.r_[n, off])
    return intersect_halfspaces([tuple(r) for r in rows])


def polytope_volume(P: Polytope) -> float:
    """Volume by a fan of tetrahedra from the origin over every face."""
    V = P.vertices
    A, b = P.A, P.b
    total = 0.0
    for f in P.faces:
        a = A[f.halfspace]
        off = np.abs(V[list(f.cycle)] @ a - b[f.halfspace]) / np.linalg.norm(a)
        if np.max(off) > 1e-7 * max(1.0, float(np.max(np.abs(V)))):
            raise DegenerateFace(f"face on halfspace {f.halfspace} is not planar")
        p0 = V[f.cycle[0]]
        for s in range(1, len(f.cycle) - 1):
            total += np.dot(p0, np.cross(V[f.cycle[s]], V[f.cycle[s + 1]])) / 6.0
    return float(total)


def surface_area(P: Polytope) -> float:
    V = P.vertices
    area = 0.0
    for f in P.faces:
        p0 = V[f.cycle[0]]
        for s in range(1, len(f.cycle) - 1):
            area += 0.5 * np.linalg.norm(np.cross(V[f.cycle[s]] - p0, V[f.cycle[s + 1]] - p0))
    return float(area)


def gauge(P: Polytope, x) -> np.ndarray | float:
    """Minkowski gauge ``max_k a_k . x / tau_k`` of a polytope containing o.

    Accepts a single point or an ``(N, 3)`` array.
    """
    b = P.b
    if np.any(b <= 0):
        raise ValueError("the gauge needs the origin in the interior")
    x = np.asarray(x, dtype=float)
    vals = np.maximum((x.reshape(-1, 3) @ P.A.T / b).max(axis=1), 0.0)
    return float(vals[0]) if x.ndim == 1 else vals


def steiner_volume(body, r: float) -> float:
    """Volume of ``body + r B`` from tabulated Steiner coefficients.

    ``body`` is anything carrying ``volume`` and ``steiner = (S, M)``, where S is
    the surface area and M the mean-width coefficient, so that
    ``vol + S r + M r^2 + (4 pi / 3) r^3`` is the parallel-body volume.
    """
    coeffs = getattr(body, "steiner", None)
    if coeffs is None:
        raise MissingSteinerData(f"no Steiner coefficients for {getattr(body, 'name', body)!r}")
    S, M = coeffs
    vol = body.volume if not callable(body.volume) else body.volume()
    return float(vol + S * r + M * r * r + 4.0 * math.pi / 3.0 * r ** 3)


def mean_width_coefficient(P: Polytope) -> float:
    """``sum_e len(e) (pi - dihedral(e)) / 2`` over the edges of ``P``."""
    A = P.A / np.linalg.norm(P.A, axis=1)[:, None]
    V = P.vertices
    edge_faces: dict[tuple[int, int], list[int]] = {}
    for f in P.faces:
        c = f.cycle
        for s in range(len(c)):
            u, v = c[s], c[(s + 1) % len(c)]
            edge_faces.setdefault((min(u, v), max(u, v)), []).append(f.halfspace)
    total = 0.0
    for (u, v), ks in edge_faces.items():
        n1, n2 = A[ks[0]], A[ks[1]]
        ext = math.acos(max(-1.0, min(1.0, float(n1 @ n2))))
        total += np.linalg.norm(V[u] - V[v]) * ext / 2.0
    return float(total)


def distance_to_polytope(P: Polytope, x: np.ndarray) -> np.ndarray:
    """Euclidean distance from each row of ``x`` to ``P`` (zero inside)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    V = P.vertices
    inside = P.contains(x, tol=0.0)
    best = np.min(np.linalg.norm(x[:, None, :] - V[None], axis=2), axis=1)
    for u, v in P.edges:
        d = V[v] - V[u]
        t = np.clip((x - V[u]) @ d / (d @ d), 0.0, 1.0)
        best = np.minimum(best, np.linalg.norm(x - (V[u] + t[:, None] * d), axis=1))
    A, b = P.A, P.b
    for f in P.faces:
        a = A[f.halfspace] / np.linalg.norm(A[f.halfspace])
        t = b[f.halfspace] / np.linalg.norm(A[f.halfspace])
        h = x @ a - t
        proj = x - h[:, None] * a
        ok = h > 0
        cyc = V[list(f.cycle)]
        for s in range(len(cyc)):
            e = cyc[(s + 1) % len(cyc)] - cyc[s]
            ok &= np.cross(e, proj - cyc[s]) @ a >= 0
        best = np.where(ok, np.minimum(best, h), best)
    return np.where(inside, 0.0, best)

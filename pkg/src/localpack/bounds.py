"""Truncaters, colonies and neighbour-count bounds.

A truncater Gamma is a convex body; its colony is
``Gamma* = {x : |x|^2 / 2 <= h_Gamma(x)}``, the set of x whose bisector with o
meets Gamma.  Points of a packing outside the colony cannot shape the part of
the cell inside Gamma, so counting how many translates fit in the colony bounds
the number of relevant neighbours.  Two counts are implemented: a volume count
via the Steiner formula and a spherical cap count via sections of a sphere by
the translates.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bodies import R1, R2, Ball, Body, catalog
from .errors import (
    AngleOutOfRange,
    EmptyDomain,
    EmptySection,
    NonBallTruncater,
    NonpositiveMu,
    SectionTopology,
    SelfIntersecting,
)
from .geometry import steiner_volume

PHI = 24.3
LOCAL_DENSITY_FLOOR = 0.53835
MOLNAR = math.pi / math.sqrt(12)


# ---------------------------------------------------------------------------
# the tau / m bounds


def conv_ball_point_volume(D: float) -> float:
    """Volume of the convex hull of the unit ball and a point at distance ``D >= 1``."""
    cone = math.pi / 3 * (1 - 1 / D ** 2) * (D - 1 / D)
    h = 1 - 1 / D
    cap = math.pi * h * h * (3 - h) / 3
    return cone + 4 * math.pi / 3 - cap


def tau_ratio(phi: float) -> float:
    """``8 / vol(conv(B, p))`` with ``|p| = phi / 2``, written ``24 / (pi (phi/2 + 2 + 2/phi))``."""
    return 24.0 / (math.pi * (phi / 2 + 2 + 2 / phi))


def tau_and_m_bounds(body: str | None = None) -> dict:
    """Intermediates of the truncation radius bound.

    The radius bound and the point count bounds for the octahedron and the
    cuboctahedron are quoted, not derived; the inequality behind the radius
    bound is evaluated.
    """
    lo, hi = 2.0, 200.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tau_ratio(mid) < LOCAL_DENSITY_FLOOR:
            hi = mid
        else:
            lo = mid
    out = {
        "phi": PHI,
        "ratio": tau_ratio(PHI),
        "conv_volume": math.pi / 3 * (PHI / 2 + 2 + 2 / PHI),
        "density_floor": LOCAL_DENSITY_FLOOR,
        "holds": tau_ratio(PHI) < LOCAL_DENSITY_FLOOR,
        "phi_threshold": hi,
        "tau_bound": PHI,
        "m_bound": 26 ** 3,
    }
    if body in ("O", "C"):
        out["tau_bound_body"] = 10
        out["m_bound_body"] = 11 ** 3
    return out


# ---------------------------------------------------------------------------
# truncaters and colonies


@dataclass(frozen=True)
class Truncater:
    """``kind="ball"``: the ball of radius ``r`` in R^3;
    ``kind="box"``: the planar rectangle ``|x| <= k, |y| <= 1``."""

    kind: str
    r: float = 1.0
    k: float = 1.0

    @property
    def dim(self) -> int:
        return 3 if self.kind == "ball" else 2

    def support(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.kind == "ball":
            return self.r * np.linalg.norm(u, axis=1)
        if self.kind == "box":
            return self.k * np.abs(u[:, 0]) + np.abs(u[:, 1])
        raise ValueError(self.kind)

    def radial(self, u) -> np.ndarray:
        """Distance from o to the boundary along unit directions u."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.kind == "ball":
            return np.full(len(u), self.r)
        with np.errstate(divide="ignore"):
            return np.minimum(self.k / np.abs(u[:, 0]), 1.0 / np.abs(u[:, 1]))


@dataclass(frozen=True)
class Colony:
    truncater: Truncater

    def extent(self, u) -> np.ndarray:
        """Radial extent ``2 h(u)`` of the colony along unit directions u."""
        return 2.0 * self.truncater.support(u)

    def gamma(self, p) -> np.ndarray:
        """Scale taking a boundary point p of the truncater to the colony boundary."""
        p = np.atleast_2d(np.asarray(p, dtype=float))
        return 2.0 * self.truncater.support(p) / np.sum(p * p, axis=1)

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return 0.5 * np.sum(x * x, axis=1) <= self.truncater.support(x) + tol


def colony(truncater: Truncater) -> Colony:
    return Colony(truncater)


def box_gamma(k: float, x: float, y: float) -> float:
    """Closed form of the colony scale on the boundary of the ``k x 1`` box."""
    if abs(abs(y) - 1.0) <= 1e-12:
        return 2 * (k * abs(x) + 1) / (x * x + 1)
    if abs(abs(x) - k) <= 1e-12:
        return 2 * (k * k + abs(y)) / (k * k + y * y)
    raise ValueError("point is not on the boundary of the box")


def steiner_neighbor_bound(body: Body | str, truncater: Truncater) -> dict:
    """Volume count of translates meeting the colony of a ball truncater.

    Returns ``floor(vol(body + 2r B) / vol(body) - 1)`` and its intermediates.
    """
    if isinstance(body, str):
        body = catalog(body)
    if truncater.kind != "ball":
        raise NonBallTruncater("the Steiner bound needs a ball truncater")
    R = 2.0 * truncater.r
    sv = steiner_volume(body, R)
    ratio = sv / body.volume - 1.0
    return {"body": body.name, "r": truncater.r, "colony_radius": R, "steiner_volume": sv,
            "ratio": ratio, "bound": int(math.floor(ratio + 1e-12))}


# ---------------------------------------------------------------------------
# spherical regions


def _cross3(a, b):
    return np.stack([a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
                     a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
                     a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]], axis=-1)


def _basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - (a @ n) * n
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


@dataclass(frozen=True, eq=False)
class Arc:
    """Arc of the circle ``{|y| = rho, normal . y = offset}``.

    The region lies on the side ``normal . y >= offset``; the arc runs
    counterclockwise about ``normal`` from ``start`` to ``end``.
    """

    normal: np.ndarray
    offset: float
    start: np.ndarray
    end: np.ndarray
    full: bool = False
    span: float | None = None

    @property
    def small_cap_side(self) -> bool:
        return self.offset > 0

    def angle(self, y) -> float:
        n = self.normal
        e1, e2 = _basis(n)
        q = np.asarray(y) - self.offset * n
        return math.atan2(float(q @ e2), float(q @ e1))

    def sweep(self) -> float:
        if self.full:
            return 2 * math.pi
        if self.span is not None:
            return self.span
        return (self.angle(self.end) - self.angle(self.start)) % (2 * math.pi)

    def tangent(self, y) -> np.ndarray:
        t = _cross3(self.normal, np.asarray(y) - self.offset * self.normal)
        return t / np.linalg.norm(t)


@dataclass(frozen=True, eq=False)
class SphericalRegion:
    radius: float
    loops: tuple[tuple[Arc, ...], ...]

    def corner_angles(self) -> list[list[float]]:
        out = []
        for loop in self.loops:
            angles = []
            if len(loop) == 1 and loop[0].full:
                out.append(angles)
                continue
            for i, arc in enumerate(loop):
                nxt = loop[(i + 1) % len(loop)]
                P = arc.end
                t_in, t_out = arc.tangent(P), nxt.tangent(nxt.start)
                nP = P / np.linalg.norm(P)
                turn = math.atan2(float(_cross3(t_in, t_out) @ nP), float(t_in @ t_out))
                angles.append(math.pi - turn)
            out.append(angles)
        return out


def _circle_hits(n1, d1, n2, d2, rho):
    g = float(n1 @ n2)
    t = np.cross(n1, n2)
    tt = float(t @ t)
    if tt <= 1e-24:
        return []
    alpha = (d1 - g * d2) / (1 - g * g)
    beta = (d2 - g * d1) / (1 - g * g)
    y0 = alpha * n1 + beta * n2
    s2 = rho * rho - float(y0 @ y0)
    if s2 < -1e-14 * rho * rho:
        return []
    s = math.sqrt(max(s2, 0.0))
    tu = t / math.sqrt(tt)
    return [y0 + s * tu, y0 - s * tu]


def _check_simple(region: SphericalRegion) -> None:
    arcs = [a for loop in region.loops for a in loop]
    rho = region.radius
    eps = 1e-9
    for i in range(len(arcs)):
        for j in range(i + 1, len(arcs)):
            a, b = arcs[i], arcs[j]
            for y in _circle_hits(a.normal, a.offset, b.normal, b.offset, rho):
                if _strictly_inside(a, y, eps) and _strictly_inside(b, y, eps):
                    raise SelfIntersecting("two boundary arcs cross")


def _strictly_inside(arc: Arc, y, eps: float) -> bool:
    if arc.full:
        return True
    sw = arc.sweep()
    pos = (arc.angle(y) - arc.angle(arc.start)) % (2 * math.pi)
    return eps < pos < sw - eps


def gauss_bonnet_area(region: SphericalRegion, check: bool = True) -> float:
    """Area of a spherical region bounded by one loop of circular arcs.

    ``area = rho^2 (sum theta_i + (2 - n) pi) - rho sum d_i dphi_i`` where
    ``theta_i`` are the interior corner angles, ``d_i`` the signed plane
    offsets and ``dphi_i`` the angles swept about the plane normals; the last
    sum is ``rho^2`` times the integrated geodesic curvature.

    Raises
    ------
    SelfIntersecting, AngleOutOfRange, SectionTopology
    """
    if len(region.loops) != 1:
        raise SectionTopology(f"{len(region.loops)} boundary loops")
    rho = region.radius
    loop = region.loops[0]
    angles = region.corner_angles()[0]
    if check:
        for th in angles:
            if not 0.0 < th < 2 * math.pi:
                raise AngleOutOfRange(f"corner angle {th!r}")
        _check_simple(region)
    n = len(angles)
    geo = sum(a.offset * a.sweep() for a in loop)
    return float(rho * rho * (sum(angles) + (2 - n) * math.pi) - rho * geo)


def _unit_rows(normals, offsets):
    N = np.atleast_2d(np.asarray(normals, dtype=float))
    nrm = np.linalg.norm(N, axis=1)
    return N / nrm[:, None], np.asarray(offsets, dtype=float) / nrm


def spherical_section(rho: float, normals, offsets) -> SphericalRegion | str:
    """Trace the boundary of ``{|y| = rho, n_k . y >= d_k for all k}``.

    Every constraint circle is cut at its intersections with the others; the
    pieces whose midpoints satisfy all constraints are chained into loops.
    Returns a :class:`SphericalRegion`, or the string ``"full"`` when no
    constraint cuts the sphere.

    Raises
    ------
    EmptySection
    """
    N, d = _unit_rows(normals, offsets)
    if np.any(d >= rho):
        raise EmptySection("a constraint excludes the whole sphere")
    live = d > -rho
    N, d = N[live], d[live]
    if len(d) == 0:
        return "full"
    _, keep = np.unique(np.round(np.column_stack([N, d / rho]), 12), axis=0, return_index=True)
    keep = np.sort(keep)
    N, d = N[keep], d[keep]
    K = len(d)
    tol = 1e-12 * rho
    # pairwise intersection points of the constraint circles
    G = N @ N.T
    T = _cross3(N[:, None, :], N[None, :, :])
    tt = np.sum(T * T, axis=2)
    ok = tt > 1e-24
    den = np.where(ok, 1.0 - G * G, 1.0)
    al = (d[:, None] - G * d[None, :]) / den
    be = (d[None, :] - G * d[:, None]) / den
    Y0 = al[..., None] * N[:, None, :] + be[..., None] * N[None, :, :]
    s2 = rho * rho - np.sum(Y0 * Y0, axis=2)
    ok &= s2 >= -1e-14 * rho * rho
    sq = np.sqrt(np.maximum(s2, 0.0)) / np.sqrt(np.where(ok, tt, 1.0))
    hits = np.stack([Y0 + sq[..., None] * T, Y0 - sq[..., None] * T], axis=2)
    E1 = np.empty_like(N)
    E2 = np.empty_like(N)
    for k in range(K):
        E1[k], E2[k] = _basis(N[k])
    arcs = []
    for k in range(K):
        nk, dk = N[k], d[k]
        a = math.sqrt(max(rho * rho - dk * dk, 0.0))
        P = hits[k][ok[k]].reshape(-1, 3) - dk * nk
        if len(P) == 0:
            y = dk * nk + a * E1[k]
            if np.all(N @ y - d >= -tol):
                arcs.append(Arc(nk, dk, y, y, True, 2 * math.pi))
            continue
        phis = np.unique(np.round(np.arctan2(P @ E2[k], P @ E1[k]), 13))
        ends = np.append(phis[1:], phis[0] + 2 * math.pi)
        span = ends - phis
        mid = 0.5 * (phis + ends)
        Ym = dk * nk + a * (np.cos(mid)[:, None] * E1[k] + np.sin(mid)[:, None] * E2[k])
        good = np.all(Ym @ N.T - d >= -tol, axis=1) & (span > 1e-12)
        for j in np.flatnonzero(good):
            y0 = dk * nk + a * (math.cos(phis[j]) * E1[k] + math.sin(phis[j]) * E2[k])
            y1 = dk * nk + a * (math.cos(ends[j]) * E1[k] + math.sin(ends[j]) * E2[k])
            arcs.append(Arc(nk, dk, y0, y1, False, float(span[j])))
    if not arcs:
        raise EmptySection("the sphere misses the body")
    loops = [(a,) for a in arcs if a.full]
    rest = [a for a in arcs if not a.full]
    if rest:
        S = np.array([a.start for a in rest])
        used = np.zeros(len(rest), dtype=bool)
        close = 1e-7 * rho
        for s0 in range(len(rest)):
            if used[s0]:
                continue
            loop = [s0]
            used[s0] = True
            while True:
                dist = np.linalg.norm(S - rest[loop[-1]].end, axis=1)
                if len(loop) > 1 and dist[s0] <= close:
                    break
                dist[used] = np.inf
                nxt = int(np.argmin(dist))
                if dist[nxt] > close:
                    if dist[s0] <= close or np.linalg.norm(S[s0] - rest[loop[-1]].end) <= close:
                        break
                    raise SectionTopology("open boundary chain")
                used[nxt] = True
                loop.append(nxt)
            loops.append(tuple(rest[i] for i in loop))
    return SphericalRegion(rho, tuple(loops))


def _strip_lengths(rho, Nl, d, z):
    """Admissible longitude measure on the latitude circles at heights z."""
    s = np.sqrt(np.maximum(rho * rho - z * z, 0.0))
    A = s[:, None] * np.hypot(Nl[:, 0], Nl[:, 1])[None, :]
    C = d[None, :] - Nl[None, :, 2] * z[:, None]
    phi0 = np.arctan2(Nl[:, 1], Nl[:, 0])[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.arccos(np.clip(np.where(A > 0, C / A, 0.0), -1.0, 1.0))
    br = np.concatenate([(phi0 - alpha) % (2 * np.pi), (phi0 + alpha) % (2 * np.pi),
                         np.zeros((len(z), 1))], axis=1)
    br = np.sort(br, axis=1)
    br = np.concatenate([br, np.full((len(z), 1), 2 * np.pi)], axis=1)
    mid = 0.5 * (br[:, 1:] + br[:, :-1])
    width = br[:, 1:] - br[:, :-1]
    X = s[:, None] * np.cos(mid)
    Y = s[:, None] * np.sin(mid)
    vals = (X[..., None] * Nl[None, None, :, 0] + Y[..., None] * Nl[None, None, :, 1]
            + z[:, None, None] * Nl[None, None, :, 2])
    ok = np.all(vals - d[None, None, :] >= 0.0, axis=2)
    return np.sum(width * ok, axis=1)


def _strip_sum(rho, Nl, d, lo, hi, strips):
    h = (hi - lo) / strips
    total = 0.0
    for chunk in np.array_split(np.arange(strips), max(1, strips // 5000)):
        total += float(np.sum(_strip_lengths(rho, Nl, d, lo + (chunk + 0.5) * h)))
    return total * rho * h


def strip_area(rho: float, normals, offsets, strips: int = 40000, axis=None) -> float:
    """Mesh integration of the same region.

    The sphere is cut into equal-height bands about ``axis``; on the middle
    circle of each band the admissible longitude set is measured exactly by
    testing the midpoints between all constraint breakpoints, so each band
    holds ``2K + 1`` cells for K constraints.  A coarse pass locates the
    heights the region occupies and ``strips`` bands are then spent there.
    """
    N, d = _unit_rows(normals, offsets)
    if axis is None:
        axis = np.array([0.2718281828, 0.3141592653, 0.9])
    ax = np.asarray(axis, dtype=float)
    ax /= np.linalg.norm(ax)
    e1, e2 = _basis(ax)
    Nl = N @ np.stack([e1, e2, ax]).T
    coarse = 2000
    h = 2 * rho / coarse
    z = -rho + (np.arange(coarse) + 0.5) * h
    hit = np.flatnonzero(_strip_lengths(rho, Nl, d, z) > 0)
    if len(hit) == 0:
        return 0.0
    lo = max(-rho, -rho + (hit[0] - 1) * h)
    hi = min(rho, -rho + (hit[-1] + 2) * h)
    return _strip_sum(rho, Nl, d, lo, hi, strips)


def _body_rows(body: Body, x) -> tuple[np.ndarray, np.ndarray]:
    """Constraints ``n . y >= d`` describing ``body + x``."""
    P = body.polytope
    A, b = P.A, P.b
    x = np.asarray(x, dtype=float)
    return -A, -(b + A @ x)


def sphere_body_section_area(body: Body | Ball | str, x, rho: float, method: str = "gauss-bonnet") -> float:
    """Area of ``{|y| = rho} cap (body + x)``.

    ``method`` is ``"gauss-bonnet"`` (boundary arcs) or ``"mesh"`` (strips).
    A Gauss-Bonnet evaluation falls back to the mesh when the section has
    several boundary loops.

    Raises
    ------
    EmptySection
    """
    if isinstance(body, str):
        body = catalog(body)
    x = np.asarray(x, dtype=float)
    shape = body.shape if isinstance(body, Body) else body
    if isinstance(shape, Ball):
        r = shape.radius
        dist = float(np.linalg.norm(x))
        if dist == 0.0:
            if r >= rho:
                return 4 * math.pi * rho * rho
            raise EmptySection("the sphere misses the ball")
        dd = (rho * rho + dist * dist - r * r) / (2 * dist)
        if dd >= rho:
            raise EmptySection("the sphere misses the ball")
        if dd <= -rho:
            return 4 * math.pi * rho * rho
        return 2 * math.pi * rho * (rho - dd)
    N, d = _body_rows(body, x)
    if method == "mesh":
        area = strip_area(rho, N, d)
        if area <= 0:
            raise EmptySection("the sphere misses the body")
        return area
    region = spherical_section(rho, N, d)
    if region == "full":
        return 4 * math.pi * rho * rho
    try:
        return gauss_bonnet_area(region, check=False)
    except SectionTopology:
        return strip_area(rho, N, d)


# ---------------------------------------------------------------------------
# cap bounds


def equal_cap_radius(s: float, r: float) -> float:
    """Sphere radius at which balls of radius s centred at distances 2s and 2r cut equal caps."""
    return math.sqrt(s * s + 4 * r * s)


@dataclass(frozen=True)
class BodyParameters:
    body: str
    r: float
    inradius: float

    @property
    def rho(self) -> float:
        return equal_cap_radius(self.inradius, self.r)

    @property
    def cap(self) -> float:
        """Cap cut by the inscribed ball centred at distance ``2 inradius``."""
        rho = self.rho
        return 2 * math.pi * rho * (rho - self.r - self.inradius)


PARAMETERS = {
    "O": BodyParameters("O", R1, 1 / math.sqrt(3)),
    "C": BodyParameters("C", R2, 1.0),
}


def parameters(name: str) -> BodyParameters:
    if name not in PARAMETERS:
        raise KeyError(f"no truncation parameters tabulated for {name!r}")
    return PARAMETERS[name]


def cap_bound(rho: float, mu: float, molnar: bool = True) -> dict:
    """How many disjoint regions of area ``mu`` fit on a sphere of radius rho.

    The plain count is ``4 pi rho^2 / mu``.  When ``mu`` is the area of a
    congruent cap contained in every section (``molnar=True``), multiplying by
    the cap packing density bound ``pi / sqrt(12)`` gives the sharper count.
    Both values are reported; ``bound`` follows the flag.
    """
    if not mu > 0:
        raise NonpositiveMu(f"mu = {mu!r}")
    plain = 4 * math.pi * rho * rho / mu
    sharp = MOLNAR * plain
    value = sharp if molnar else plain
    return {"rho": rho, "mu": mu, "plain": plain, "plain_bound": int(math.floor(plain + 1e-12)),
            "molnar": molnar, "molnar_value": sharp, "molnar_bound": int(math.floor(sharp + 1e-12)),
            "value": value, "bound": int(math.floor(value + 1e-12))}


# ---------------------------------------------------------------------------
# the fundamental domain search


def _plane_normal(p, q):
    n = np.cross(p, q)
    return n / np.linalg.norm(n)


@dataclass(frozen=True, eq=False)
class Domain:
    """``(colony \\ int(2 K)) cap Q1 cap Q2 cap Q3`` for a ball colony of radius R.

    The three halfspaces through o cut out a cone over a spherical triangle.
    A point of the domain is ``r u`` with u in the triangle and
    ``2 / g(u) <= r <= R``, g the gauge of K.
    """

    body: Body
    R: float
    corners: tuple[np.ndarray, np.ndarray, np.ndarray]
    normals: tuple[np.ndarray, np.ndarray, np.ndarray]

    @classmethod
    def from_planes(cls, body: Body, R: float, planes, witnesses) -> "Domain":
        """``planes[i]`` is a pair of points spanning a plane through o with ``witnesses[i]`` on the kept side."""
        normals = []
        for (p, q), w in zip(planes, witnesses):
            n = _plane_normal(np.asarray(p, float), np.asarray(q, float))
            if n @ np.asarray(w, float) < 0:
                n = -n
            normals.append(n)
        corners = []
        for i in range(3):
            a, b = normals[(i + 1) % 3], normals[(i + 2) % 3]
            c = np.cross(a, b)
            c /= np.linalg.norm(c)
            if c @ normals[i] < 0:
                c = -c
            corners.append(c)
        return cls(body, R, tuple(corners), tuple(normals))

    def inner(self, u) -> np.ndarray:
        return 2.0 / np.asarray(self.body.gauge(np.atleast_2d(u)))

    def contains(self, x, tol: float = 1e-9) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        ok = r <= self.R * (1 + tol)
        ok &= np.asarray(self.body.gauge(x)) >= 2.0 * (1 - tol)
        for n in self.normals:
            ok &= x @ n >= -tol * r
        return ok

    def _apex(self) -> int:
        g = [float(self.body.gauge(c)) for c in self.corners]
        return int(np.argmax(g))

    def chart(self):
        """Map ``(psi, sigma, w)`` in the unit cube onto the domain."""
        k = self._apex()
        c = self.corners[k]
        p, q = self.corners[(k + 1) % 3], self.corners[(k + 2) % 3]
        if self.inner(c)[0] > self.R:
            raise EmptyDomain("the domain is empty")
        body, R = self.body, self.R

        def geodesic(psi):
            m = (1 - psi) * p + psi * q
            m /= np.linalg.norm(m)
            t = m - (m @ c) * c
            t /= np.linalg.norm(t)
            return math.acos(max(-1.0, min(1.0, float(m @ c)))), t

        cache: dict[float, tuple[float, np.ndarray]] = {}

        def alpha_max(psi):
            if psi in cache:
                return cache[psi]
            full, t = geodesic(psi)
            grid = np.linspace(0.0, full, 65)
            U = np.cos(grid)[:, None] * c + np.sin(grid)[:, None] * t
            bad = 2.0 / np.asarray(body.gauge(U)) > R
            if not np.any(bad):
                out = (full, t)
            else:
                j = int(np.argmax(bad))
                lo, hi = grid[j - 1], grid[j]
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    u = math.cos(mid) * c + math.sin(mid) * t
                    if 2.0 / body.gauge(u) > R:
                        hi = mid
                    else:
                        lo = mid
                out = (lo, t)
            cache[psi] = out
            return out

        def point(psi, sigma, w):
            am, t = alpha_max(psi)
            a = sigma * am
            u = math.cos(a) * c + math.sin(a) * t
            rin = min(2.0 / body.gauge(u), R)
            return (rin + w * (R - rin)) * u

        return point


@dataclass(frozen=True)
class MuResult:
    mu: float
    minimizer: np.ndarray
    samples: int
    evaluations: int


def mu_min(body: Body | str, domain: Domain, rho: float, samples_per_axis: int = 22, seed: int = 0,
           refine_from: int = 4) -> MuResult:
    """Minimum section area over a domain.

    Evaluates ``samples_per_axis^3`` points of a chart of the domain whose
    faces are the domain's boundary pieces, then runs coordinate descent with
    step halving down to ``1e-7`` from the best few samples.

    Raises
    ------
    EmptyDomain
    """
    if isinstance(body, str):
        body = catalog(body)
    point = domain.chart()
    g = np.linspace(0.0, 1.0, samples_per_axis)
    evals = 0
    memo: dict[tuple[float, float, float], float] = {}

    def f(z):
        nonlocal evals
        key = tuple(round(float(v), 15) for v in z)
        if key not in memo:
            evals += 1
            try:
                memo[key] = sphere_body_section_area(body, point(*key), rho)
            except EmptySection:
                memo[key] = math.inf
        return memo[key]

    pts = [(a, b, c) for a in g for b in g for c in g]
    vals = np.array([f(z) for z in pts])
    if not np.any(np.isfinite(vals)):
        raise EmptyDomain("no sample meets the sphere")
    order = np.argsort(vals, kind="stable")[:refine_from]
    best_val, best_z = math.inf, None
    for idx in order:
        z = np.array(pts[idx], dtype=float)
        fz = vals[idx]
        step = 1.0 / (samples_per_axis - 1)
        while step >= 1e-7:
            moved = False
            for axis in range(3):
                for sgn in (1.0, -1.0):
                    cand = z.copy()
                    cand[axis] = min(1.0, max(0.0, cand[axis] + sgn * step))
                    fc = f(cand)
                    if fc < fz - 1e-15:
                        z, fz, moved = cand, fc, True
            if not moved:
                step *= 0.5
        if fz < best_val or (fz == best_val and best_z is None):
            best_val, best_z = fz, z
    return MuResult(float(best_val), np.asarray(point(*best_z)), len(pts), evals)


def reference_domain(name: str) -> Domain:
    """The domains used for the octahedron and the cuboctahedron."""
    body = catalog(name)
    if name == "O":
        s57 = math.sqrt(57)
        x1 = np.array([2 / 3, 2 / 3, 2 / 3])
        x2 = np.array([2 / 3 - 10 / (3 * s57), 2 / 3 - 10 / (3 * s57), 2 / 3 + 20 / (3 * s57)])
        x3 = np.array([1 - math.sqrt(817) / 57, 0.0, 1 + math.sqrt(817) / 57])
        x4 = np.array([1.0, 0.0, 1.0])
        return Domain.from_planes(body, 2 * R1, [(x1, x2), (x3, x4), (x1, x4)], [x4, x1, x2])
    if name == "C":
        s3 = math.sqrt(3)
        y1 = np.array([2.0, 0.0, 0.0])
        y2 = np.array([2.0, 1.0, 1.0])
        y3 = np.array([4 / 3, 4 / 3, 4 / 3])
        y4 = np.array([4 / 3 + 22 * s3 / 63, 4 / 3 - 44 * s3 / 63, 4 / 3 + 22 * s3 / 63])
        return Domain.from_planes(body, 2 * R2, [(y1, y2), (y3, y4), (y1, y4)], [y4, y1, y2])
    raise KeyError(name)


def expected_minimizer(name: str) -> np.ndarray:
    """Where the minimal section is attained for the two reference domains."""
    if name == "O":
        s57 = math.sqrt(57)
        return np.array([2 / 3 - 10 / (3 * s57), 2 / 3 - 10 / (3 * s57), 2 / 3 + 20 / (3 * s57)])
    if name == "C":
        return 2 / 21 * math.sqrt(830 / 3) * np.ones(3)
    raise KeyError(name)


def refined_cap_bound(name: str, samples_per_axis: int = 22, seed: int = 0) -> dict:
    """Plain area count ``floor(4 pi rho^2 / mu_min)`` over the reference domain.

    The minimal sections are not caps, so the cap packing density factor does
    not apply; its value is still reported.
    """
    prm = parameters(name)
    dom = reference_domain(name)
    res = mu_min(name, dom, prm.rho, samples_per_axis, seed)
    cb = cap_bound(prm.rho, res.mu, molnar=False)
    gap = float(np.linalg.norm(res.minimizer - expected_minimizer(name)))
    cb.update({"minimizer": res.minimizer.tolist(), "samples": res.samples, "evaluations": res.evaluations,
               "cap_lower_bound": prm.cap, "expected_minimizer": expected_minimizer(name).tolist(),
               "minimizer_gap": gap, "minimizer_matches": gap <= 1e-3})
    return cb


# ---------------------------------------------------------------------------
# reports


@dataclass
class BoundReport:
    body: str
    values: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"body": self.body, **self.values}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def table(self) -> str:
        lines = []
        for key in ("steiner", "cap", "refined"):
            if key in self.values:
                lines.append(f"{key}: {self.values[key]['bound']}")
        return "\n".join(lines)


def bound_report(name: str, r: float | None = None, rho: float | None = None, refined: bool = True,
                 samples_per_axis: int = 22) -> BoundReport:
    prm = parameters(name)
    r = prm.r if r is None else r
    rho = prm.rho if rho is None else rho
    rep = BoundReport(name)
    rep.values["steiner"] = steiner_neighbor_bound(name, Truncater("ball", r))
    rep.values["cap"] = cap_bound(rho, prm.cap)
    if refined:
        rep.values["refined"] = refined_cap_bound(name, samples_per_axis)
    rep.values["tau"] = tau_and_m_bounds(name)
    return rep

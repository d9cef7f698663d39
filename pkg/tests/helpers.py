"""Random inputs shared by several test modules."""
from __future__ import annotations

import itertools

import numpy as np

from localpack.cell import PointConfig
from localpack.colorgraph import constraints_from_graph


def random_packing(body, rng, count=30, radius=None, guard=None, max_tries=20000):
    """A random packing of translates of ``body`` around o with a bounded cell.

    Points are drawn uniformly in a ball and kept when they respect the
    packing condition; 26 far guard points make the cell bounded.
    """
    R = float(np.max(np.linalg.norm(body.polytope.vertices, axis=1))) if body.is_polytope else body.shape.radius
    radius = radius or 4.0 * R
    guard = guard or 4.0 * radius
    pts = [np.zeros(3)]
    tries = 0
    while len(pts) < count + 1 and tries < max_tries:
        tries += 1
        x = rng.normal(size=3)
        x *= radius * rng.random() ** (1 / 3) / np.linalg.norm(x)
        if np.all(np.asarray(body.gauge(x - np.array(pts))) >= 2.0 + 1e-6):
            pts.append(x)
    for d in itertools.product((-1, 0, 1), repeat=3):
        if d != (0, 0, 0):
            v = np.array(d, dtype=float)
            pts.append(guard * v / np.linalg.norm(v))
    return PointConfig(np.array(pts), body)


def feasible_seed(name, G, X, rng, amplitude):
    """Perturb X and rescale until every row of the graph's constraint set holds."""
    cs = constraints_from_graph(name, G)
    bounds = np.array([r.bound for r in cs.rows])
    Y = X + rng.uniform(-amplitude, amplitude, X.shape)
    vals = np.abs(cs.values(Y))
    s = max(1.0, float(np.max(bounds / vals)))
    return Y * s * (1 + 1e-9)


def random_convex_spherical_polygon(rng, max_tries=1000):
    """Radius, normals and offsets of an intersection of 3 to 7 convex caps containing a common point."""
    from localpack.bounds import spherical_section

    for _ in range(max_tries):
        rho = float(rng.uniform(0.5, 3.0))
        c = rng.normal(size=3)
        c /= np.linalg.norm(c)
        k = int(rng.integers(3, 8))
        N = c + 0.9 * rng.normal(size=(k, 3))
        N /= np.linalg.norm(N, axis=1)[:, None]
        d = rho * rng.uniform(0.0, 0.6, size=k)
        d = np.minimum(d, 0.95 * rho * (N @ c))
        if np.any(d < 0):
            continue
        try:
            region = spherical_section(rho, N, d)
        except Exception:
            continue
        if region != "full" and len(region.loops) == 1:
            return rho, N, d, region
    raise RuntimeError("no polygon found")

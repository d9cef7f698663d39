"""Minimising the local cell volume over configurations of fixed combinatorics.

For a fixed coloured graph the cell vertices are the solutions of the 3x3
systems ``x_i . p = |x_i|^2 / 2`` over the graph triangles, and the volume is
a sum of pyramid volumes over the faces.  The packing condition becomes the
rows of :func:`localpack.colorgraph.constraints_from_graph`.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize as _scipy_minimize
from scipy.optimize import nnls

from .bodies import Body, catalog
from .cell import PointConfig, build_cell, classify_packing
from .colorgraph import ColorGraph, ConstraintSet, canonical_form, constraints_from_graph, graph_from_cell
from .errors import DegenerateVertex, InfeasibleSeed, LocalPackError, NearSingularTriple, NonpositiveVolume

SINGULAR_TOL = 1e-10
FEAS_TOL = 1e-9
ACTIVE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Combinatorics:
    """Face structure of a simple cell.

    ``triples[t]`` are the three graph vertices meeting at cell vertex t and
    ``faces[i]`` lists, in cyclic order, the cell vertices on face i.
    """

    n: int
    triples: np.ndarray
    faces: tuple[tuple[int, ...], ...]

    @classmethod
    def from_graph(cls, G: ColorGraph) -> "Combinatorics":
        tri_index: dict[frozenset, int] = {}
        triples = []
        faces = []
        for i in range(G.n):
            cyc = []
            for a in G.rotation[i]:
                key = frozenset((i, a, G.succ(i, a)))
                if key not in tri_index:
                    tri_index[key] = len(triples)
                    triples.append(sorted(key))
                cyc.append(tri_index[key])
            faces.append(tuple(cyc))
        return cls(G.n, np.array(triples, dtype=int), tuple(faces))

    def triple_set(self) -> set[tuple[int, ...]]:
        return {tuple(int(v) for v in t) for t in self.triples}

    def fan(self) -> tuple[np.ndarray, np.ndarray]:
        """(generator, three vertex indices) for every fan triangle."""
        gen, tri = [], []
        for i, cyc in enumerate(self.faces):
            for s in range(1, len(cyc) - 1):
                gen.append(i)
                tri.append((cyc[0], cyc[s], cyc[s + 1]))
        return np.array(gen, dtype=int), np.array(tri, dtype=int)


def cell_vertices(X: np.ndarray, comb: Combinatorics) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cell vertices by Cramer's rule.

    Returns the vertices, the determinants and the cofactor vectors
    ``(r2 x r3, r3 x r1, r1 x r2)`` of each triple.
    """
    R = X[comb.triples]
    h = 0.5 * np.sum(R * R, axis=2)
    c1 = np.cross(R[:, 1], R[:, 2])
    c2 = np.cross(R[:, 2], R[:, 0])
    c3 = np.cross(R[:, 0], R[:, 1])
    d = np.sum(R[:, 0] * c1, axis=1)
    if np.any(np.abs(d) < SINGULAR_TOL):
        t = int(np.argmin(np.abs(d)))
        raise NearSingularTriple(f"triple {comb.triples[t].tolist()} has determinant {d[t]:g}")
    P = (h[:, 0:1] * c1 + h[:, 1:2] * c2 + h[:, 2:3] * c3) / d[:, None]
    return P, d, np.stack([c1, c2, c3], axis=1)


def objective(X, comb: Combinatorics) -> float:
    """Cell volume for points ``X`` (shape ``(n, 3)``, origin excluded)."""
    X = np.asarray(X, dtype=float).reshape(comb.n, 3)
    P, _, _ = cell_vertices(X, comb)
    gen, tri = comb.fan()
    s = np.sum(X[gen] ** 2, axis=1)
    u = P[tri[:, 1]] - P[tri[:, 0]]
    v = P[tri[:, 2]] - P[tri[:, 0]]
    g = np.sum(u * u, 1) * np.sum(v * v, 1) - np.sum(u * v, 1) ** 2
    return float(np.sum(np.sqrt(np.maximum(s * g, 0.0))) / 12.0)


def gradient(X, comb: Combinatorics, method: str = "analytic") -> np.ndarray:
    """Gradient of :func:`objective`, shape ``(n, 3)``.

    ``method="central"`` uses central differences with step
    ``1e-6 (1 + |x|)``, ``"forward"`` forward differences with the same step.
    """
    X = np.asarray(X, dtype=float).reshape(comb.n, 3)
    if method in ("central", "forward"):
        out = np.zeros_like(X)
        f0 = objective(X, comb) if method == "forward" else None
        for i in range(comb.n):
            for k in range(3):
                hstep = 1e-6 * (1.0 + abs(X[i, k]))
                Xp = X.copy()
                Xp[i, k] += hstep
                if method == "central":
                    Xm = X.copy()
                    Xm[i, k] -= hstep
                    out[i, k] = (objective(Xp, comb) - objective(Xm, comb)) / (2 * hstep)
                else:
                    out[i, k] = (objective(Xp, comb) - f0) / hstep
        return out
    if method != "analytic":
        raise ValueError(f"unknown method {method!r}")
    P, d, C = cell_vertices(X, comb)
    gen, tri = comb.fan()
    s = np.sum(X[gen] ** 2, axis=1)
    u = P[tri[:, 1]] - P[tri[:, 0]]
    v = P[tri[:, 2]] - P[tri[:, 0]]
    uu, vv, uv = np.sum(u * u, 1), np.sum(v * v, 1), np.sum(u * v, 1)
    g = uu * vv - uv ** 2
    T = np.sqrt(np.maximum(s * g, 0.0))
    ok = T > 1e-300
    w = np.where(ok, 1.0 / (24.0 * np.where(ok, T, 1.0)), 0.0)
    grad = np.zeros_like(X)
    np.add.at(grad, gen, (w * g * 2.0)[:, None] * X[gen])
    gu = (w * s * 2.0)[:, None] * (vv[:, None] * u - uv[:, None] * v)
    gv = (w * s * 2.0)[:, None] * (uu[:, None] * v - uv[:, None] * u)
    gP = np.zeros_like(P)
    np.add.at(gP, tri[:, 0], -(gu + gv))
    np.add.at(gP, tri[:, 1], gu)
    np.add.at(gP, tri[:, 2], gv)
    # dp/dx_r = (A^{-1} e_r)(x_r - p)^T with A^{-1} e_r = C[:, r] / d
    coef = np.einsum("trk,tk->tr", C, gP) / d[:, None]
    for r in range(3):
        idx = comb.triples[:, r]
        np.add.at(grad, idx, coef[:, r:r + 1] * (X[idx] - P))
    return grad


def local_density(body: Body | str, cell_volume: float) -> float:
    if isinstance(body, str):
        body = catalog(body)
    if not cell_volume > 0:
        raise NonpositiveVolume(f"cell volume {cell_volume!r}")
    return float(body.volume / cell_volume)


# ---------------------------------------------------------------------------
# problems


@dataclass(frozen=True, eq=False)
class OptProblem:
    """Minimise the cell volume subject to packing rows.

    ``seed`` holds the n points (origin excluded).  ``fixed`` marks points held
    constant.  ``graph`` may be ``None`` for problems built by hand, in which
    case only the triple structure is compared after optimisation.
    """

    body: Body
    comb: Combinatorics
    constraints: ConstraintSet
    seed: np.ndarray
    graph: ColorGraph | None = None
    multistarts: int = 20
    mode: str = "sign-fixed"
    fixed: tuple[int, ...] = ()

    @classmethod
    def from_graph(cls, body: Body | str, G: ColorGraph, seed, **kw) -> "OptProblem":
        if isinstance(body, str):
            body = catalog(body)
        seed = np.asarray(seed, dtype=float).reshape(-1, 3)
        if len(seed) == G.n + 1 and np.all(seed[0] == 0):
            seed = seed[1:]
        return cls(body, Combinatorics.from_graph(G), constraints_from_graph(body, G), seed, G, **kw)

    def scaled(self, s: float) -> "OptProblem":
        rows = tuple(
            type(r)(r.kind, r.points, r.coefs, r.normal, r.bound * s, r.color, r.sign) for r in self.constraints.rows
        )
        cs = ConstraintSet(self.constraints.body, self.constraints.n, rows)
        return OptProblem(self.body, self.comb, cs, self.seed * s, self.graph, self.multistarts, self.mode, self.fixed)

    def to_dict(self) -> dict:
        return {
            "body": self.body.name,
            "graph": self.graph.to_dict() if self.graph else None,
            "seed": self.seed.tolist(),
            "multistarts": self.multistarts,
            "mode": self.mode,
        }

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "OptProblem":
        g = data["graph"]
        if isinstance(g, str):
            import pathlib

            path = pathlib.Path(g)
            if base_dir is not None and not path.is_absolute():
                path = pathlib.Path(base_dir) / path
            g = json.loads(path.read_text())
        G = ColorGraph.from_dict(g)
        return cls.from_graph(
            data["body"], G, data["seed"], multistarts=int(data.get("multistarts", 20)),
            mode=data.get("mode", "sign-fixed"),
        )


@dataclass(frozen=True, eq=False)
class OptResult:
    minimizer: np.ndarray
    objective: float
    iterations: int
    multistart_count: int
    start_index: int
    combinatorics_valid: bool
    active_set: tuple[int, ...]
    max_violation: float
    kkt_residual: float
    cell_volume: float | None
    density: float | None
    canonical_key: str | None
    rng_seed: int
    starts: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "minimizer": self.minimizer.tolist(),
            "objective": self.objective,
            "iterations": self.iterations,
            "multistart_count": self.multistart_count,
            "start_index": self.start_index,
            "combinatorics_valid": self.combinatorics_valid,
            "active_set": list(self.active_set),
            "max_violation": self.max_violation,
            "kkt_residual": self.kkt_residual,
            "cell_volume": self.cell_volume,
            "density": self.density,
            "canonical_key": self.canonical_key,
            "rng_seed": self.rng_seed,
        }


def _linear_system(problem: OptProblem, signs: np.ndarray):
    G, c = problem.constraints.matrix()
    return G * signs[:, None], c


def _free_mask(problem: OptProblem) -> np.ndarray:
    mask = np.ones((problem.comb.n, 3), dtype=bool)
    for i in problem.fixed:
        mask[i] = False
    return mask.ravel()


def _make_feasible(problem: OptProblem, X: np.ndarray, Gs: np.ndarray, c: np.ndarray) -> np.ndarray | None:
    """Scale the free points about the origin until every signed row holds."""
    mask = _free_mask(problem)
    v = X.ravel().copy()
    lo, hi = 1.0, 1.0
    def ok(t):
        w = v.copy()
        w[mask] *= t
        return np.all(Gs @ w - c >= FEAS_TOL * 0.5)
    if ok(1.0):
        return X
    hi = 1.0
    for _ in range(60):
        hi *= 1.05
        if ok(hi):
            break
    else:
        return None
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    w = v.copy()
    w[mask] *= hi
    return w.reshape(X.shape)


def _solve_one(problem: OptProblem, X0: np.ndarray, signs: np.ndarray, maxiter: int = 500):
    comb = problem.comb
    mask = _free_mask(problem)
    base = X0.ravel().copy()
    Gs, c = _linear_system(problem, signs)
    Gf = Gs[:, mask]

    def full(z):
        w = base.copy()
        w[mask] = z
        return w.reshape(comb.n, 3)

    def fun(z):
        return objective(full(z), comb)

    def jac(z):
        return gradient(full(z), comb).ravel()[mask]

    if problem.mode == "squared":
        G0, c0 = problem.constraints.matrix()
        cons = {
            "type": "ineq",
            "fun": lambda z: (G0 @ full(z).ravel()) ** 2 - c0 ** 2,
            "jac": lambda z: (2 * (G0 @ full(z).ravel()))[:, None] * G0[:, mask],
        }
    else:
        cons = {"type": "ineq", "fun": lambda z: Gs @ full(z).ravel() - c, "jac": lambda z: Gf}
    res = _scipy_minimize(fun, base[mask], jac=jac, method="SLSQP", constraints=[cons],
                          options={"ftol": 1e-16, "maxiter": maxiter})
    X = full(res.x)
    viol = float(max(0.0, -np.min(Gs @ X.ravel() - c)))
    if viol > FEAS_TOL and problem.mode != "squared":
        Xf = _make_feasible(problem, X, Gs, c)
        if Xf is not None:
            X = Xf
    if problem.mode != "squared":
        X = _polish(problem, X, Gs, c, mask)
    return X, int(res.nit)


def _polish(problem: OptProblem, X: np.ndarray, Gs: np.ndarray, c: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Snap the rows within ``ACTIVE_TOL`` of equality onto equality.

    The smallest correction of the free coordinates is taken; it is kept only
    when the point stays feasible and the objective does not grow by more than
    ``1e-10``.
    """
    x = X.ravel()
    slack = Gs @ x - c
    act = np.abs(slack) <= ACTIVE_TOL
    if not np.any(act):
        return X
    step, *_ = np.linalg.lstsq(Gs[act][:, mask], -slack[act], rcond=None)
    y = x.copy()
    y[mask] += step
    if np.min(Gs @ y - c) < -1e-12:
        return X
    Y = y.reshape(X.shape)
    if objective(Y, problem.comb) > objective(X, problem.comb) + 1e-10:
        return X
    return Y


def _kkt(problem: OptProblem, X: np.ndarray, Gs: np.ndarray, c: np.ndarray, active: np.ndarray) -> float:
    mask = _free_mask(problem)
    g = gradient(X, problem.comb).ravel()[mask]
    if not np.any(active):
        return float(np.linalg.norm(g))
    lam, res = nnls(Gs[active][:, mask].T, g)
    return float(res / max(1.0, np.linalg.norm(g)))


def minimize(problem: OptProblem, multistarts: int | None = None, seed: int = 0, threads: int = 1,
             perturbation: float = 0.05) -> OptResult:
    """Multistart SLSQP on the sign-fixed linear rows.

    The signs of every row are read off the seed.  Start 0 is the seed itself;
    the others perturb it by up to ``perturbation`` and are pushed back into
    the feasible region by scaling.  The best start wins, ties broken by start
    index.  Afterwards the cell of the minimiser is rebuilt and compared with
    the problem's combinatorics.

    Raises
    ------
    InfeasibleSeed
        when the seed violates a row or sits on the wrong side of zero.
    """
    k = problem.multistarts if multistarts is None else multistarts
    X0 = np.asarray(problem.seed, dtype=float).reshape(problem.comb.n, 3)
    vals = problem.constraints.values(X0)
    bounds = np.array([r.bound for r in problem.constraints.rows])
    if np.any(np.abs(vals) < bounds - FEAS_TOL):
        raise InfeasibleSeed(f"seed violates {int(np.sum(np.abs(vals) < bounds - FEAS_TOL))} rows")
    signs = np.where(vals >= 0, 1.0, -1.0)
    Gs, c = _linear_system(problem, signs)
    rng = np.random.default_rng(seed)
    mask = _free_mask(problem).reshape(X0.shape)
    starts = [X0]
    for _ in range(1, k):
        J = rng.uniform(-perturbation, perturbation, size=X0.shape) * mask
        Xs = _make_feasible(problem, X0 + J, Gs, c)
        starts.append(Xs if Xs is not None else X0)

    def run(idx):
        try:
            X, nit = _solve_one(problem, starts[idx], signs)
            f = objective(X, problem.comb)
            viol = float(max(0.0, -np.min(Gs @ X.ravel() - c)))
            if problem.mode == "squared":
                viol = float(max(0.0, -np.min(np.abs(problem.constraints.values(X)) - bounds)))
            return idx, X, f, nit, viol, None
        except LocalPackError as exc:
            return idx, None, math.inf, 0, math.inf, str(exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, range(k)))
    else:
        outcomes = [run(i) for i in range(k)]
    feasible = [o for o in outcomes if o[1] is not None and o[4] <= FEAS_TOL]
    pool_ = feasible or [o for o in outcomes if o[1] is not None]
    if not pool_:
        raise InfeasibleSeed("no start produced a solution")
    idx, X, f, nit, viol, _ = min(pool_, key=lambda o: (o[2], o[0]))
    slack = Gs @ X.ravel() - c
    if problem.mode == "squared":
        slack = np.abs(problem.constraints.values(X)) - bounds
    active = np.abs(slack) <= ACTIVE_TOL
    kkt = _kkt(problem, X, Gs, c, active) if problem.mode != "squared" else float("nan")
    valid, vol, key = _check_combinatorics(problem, X)
    density = local_density(problem.body, f) if problem.body.volume else None
    log = [{"start": o[0], "objective": o[2], "iterations": o[3], "violation": o[4], "error": o[5]} for o in outcomes]
    return OptResult(X, f, nit, k, idx, valid, tuple(int(i) for i in np.flatnonzero(active)), viol, kkt, vol,
                     density, key, seed, log)


def _check_combinatorics(problem: OptProblem, X: np.ndarray):
    cfg = PointConfig.from_points(X, problem.body)
    try:
        cell = build_cell(cfg)
    except LocalPackError:
        return False, None, None
    vol = cell.volume()
    same = set(cell.triples()) == {tuple(int(v) + 1 for v in t) for t in problem.comb.triple_set()}
    if problem.graph is None or not same:
        return same, vol, None
    try:
        cls = classify_packing(cfg, cell)
        if not cls.general:
            return False, vol, None
        G = graph_from_cell(cell)
    except (LocalPackError, DegenerateVertex):
        return False, vol, None
    key = canonical_form(G)
    return key == canonical_form(problem.graph), vol, key


def toy_problem(scale: float = 1.0) -> OptProblem:
    """Cube cell of ``{o, +-2 e_i}`` with only the first point free and one row ``x_1 >= 2``."""
    from .colorgraph import ConstraintRow

    pts = np.array([(2, 0, 0), (-2, 0, 0), (0, 2, 0), (0, -2, 0), (0, 0, 2), (0, 0, -2)], dtype=float) * scale
    cfg = PointConfig.from_points(pts, "Q")
    cell = build_cell(cfg)
    G = graph_from_cell(cell, colored=False)
    row = ConstraintRow("vertex", (0,), (1,), (1.0, 0.0, 0.0), 2.0 * scale, 1, 1)
    cs = ConstraintSet("Q", 6, (row,))
    return OptProblem(catalog("Q"), Combinatorics.from_graph(G), cs, pts.copy(), None, 4, "sign-fixed",
                      fixed=(1, 2, 3, 4, 5))

"""Acceptance criteria, one test each, at the stated tolerances."""
from __future__ import annotations

import json
import time

import numpy as np
import pytest
from helpers import feasible_seed, random_convex_spherical_polygon, random_packing
from oracles import central_difference, triangulations_by_flips

from localpack import bounds as bd
from localpack.bodies import LAMBDA_1, LAMBDA_2, R1, R2, catalog, core_extent, lattice_cell
from localpack.cell import build_cell, example_config
from localpack.colorgraph import adjacency_matrix, constraints_from_graph, graph_from_packing, matrix_from_csv
from localpack.generator import enumerate_triangulations, tutte_bounds
from localpack.optimizer import Combinatorics, OptProblem, gradient, minimize, objective


def test_ac1_lattice_cells(accept):
    t0 = time.perf_counter()
    c1 = lattice_cell(LAMBDA_1, "O")
    c2 = lattice_cell(LAMBDA_2, "C")
    dt = time.perf_counter() - t0
    r1 = np.linalg.norm(c1.polytope.vertices, axis=1)
    r2 = np.linalg.norm(c2.polytope.vertices, axis=1)
    ok = (
        abs(c1.volume - 38 / 27) <= 1e-9
        and abs(c2.volume - 196 / 27) <= 1e-9
        and c1.polytope.counts() == (24, 36, 14)
        and c2.polytope.counts()[0] == 24
        and np.max(np.abs(r1 - R1)) <= 1e-9
        and np.max(np.abs(r2 - R2)) <= 1e-9
        and dt < 1.0
    )
    accept("AC1 lattice cells", ok,
           f"vol {c1.volume:.12f} {c2.volume:.12f} radius err {np.max(np.abs(r1 - R1)):.1e} {np.max(np.abs(r2 - R2)):.1e} "
           f"{dt:.3f}s")
    assert ok


def test_ac2_examples(accept, data_dir):
    printed = json.loads((data_dir / "triples.json").read_text())
    t0 = time.perf_counter()
    details, ok = [], True
    for name, vol in (("O", 38 / 27), ("C", 196 / 27)):
        cfg = example_config(name)
        cell = build_cell(cfg)
        G = graph_from_packing(cfg)
        slack = constraints_from_graph(name, G).slacks(cfg.points[1:])
        same = sorted(cell.triples()) == sorted(tuple(t) for t in printed[name])
        good = abs(cell.volume() - vol) <= 1e-9 and same and np.max(np.abs(slack)) <= 1e-9
        ok &= good
        details.append(f"{name}: vol {cell.volume():.12f} triples {same} max|slack| {np.max(np.abs(slack)):.1e}")
    dt = time.perf_counter() - t0
    ok &= dt < 1.0
    accept("AC2 example cells and constraints", ok, "; ".join(details) + f" {dt:.3f}s")
    assert ok


@pytest.mark.parametrize("name,vol,density", [("O", 38 / 27, 18 / 19), ("C", 196 / 27, 45 / 49)])
def test_ac3_optimization(accept, name, vol, density):
    cfg = example_config(name)
    G = graph_from_packing(cfg)
    X = cfg.points[1:]
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst_obj, worst_den, all_valid = 0.0, 0.0, True
    for k in range(20):
        seed = feasible_seed(name, G, X, rng, 0.02)
        res = minimize(OptProblem.from_graph(name, G, seed), seed=k)
        worst_obj = max(worst_obj, abs(res.objective - vol))
        worst_den = max(worst_den, abs(res.density - density))
        all_valid &= res.combinatorics_valid
    dt = time.perf_counter() - t0
    ok = worst_obj <= 1e-6 and worst_den <= 1e-9 and all_valid and dt < 300
    accept(f"AC3 optimization {name}", ok,
           f"max|f-f*| {worst_obj:.1e} max|density err| {worst_den:.1e} valid {all_valid} {dt:.1f}s")
    assert ok


def test_ac4_adjacency_matrices(accept, data_dir):
    t0 = time.perf_counter()
    ok = True
    diffs = []
    for name in ("O", "C"):
        printed = matrix_from_csv((data_dir / f"matrix_{name}.csv").read_text())
        M = adjacency_matrix(graph_from_packing(example_config(name)))
        n_diff = int(np.count_nonzero(M != printed))
        diffs.append(f"{name}: {n_diff} differing entries")
        ok &= M.shape == printed.shape and n_diff == 0
    dt = time.perf_counter() - t0
    ok &= dt < 1.0
    accept("AC4 adjacency matrices", ok, "; ".join(diffs) + f" {dt:.3f}s")
    assert ok


def test_ac5_enumeration(accept, derived):
    t0 = time.perf_counter()
    batch = enumerate_triangulations(10)
    dt = time.perf_counter() - t0
    counts = {s.n: s.deduped for s in batch.stats}
    oracle = {n: len(triangulations_by_flips(n)) for n in range(4, 9)}
    frozen = {int(k): v for k, v in derived["triangulation_counts"].items()}
    ok = all(counts[n] == oracle[n] == frozen[n] for n in range(4, 9))
    ok &= all(counts[n] == frozen[n] for n in range(9, 11))
    for n in range(4, 11):
        lo, hi = tutte_bounds(n)
        ok &= lo <= counts[n] <= hi
    ok &= batch.ratio_ok() and dt < 60
    accept("AC5 enumeration", ok, f"counts {[counts[n] for n in range(4, 11)]} {dt:.1f}s to n=10")
    assert ok


def test_ac6_bounds(accept):
    t0 = time.perf_counter()
    steiner = {n: bd.steiner_neighbor_bound(n, bd.Truncater("ball", bd.parameters(n).r))["bound"] for n in "OC"}
    caps = {n: bd.cap_bound(bd.parameters(n).rho, bd.parameters(n).cap) for n in "OC"}
    refined = {n: bd.refined_cap_bound(n) for n in "OC"}
    tau = bd.tau_and_m_bounds()
    dt = time.perf_counter() - t0
    ok = (
        steiner == {"O": 40, "C": 39}
        and caps["O"]["bound"] == 26 and abs(caps["O"]["value"] - 26.300) <= 0.005
        and caps["C"]["bound"] == 26 and abs(caps["C"]["value"] - 26.372) <= 0.005
        and refined["O"]["bound"] == 22 and refined["C"]["bound"] == 22
        and tau["holds"] and tau["ratio"] < 0.53835
        and dt < 60
    )
    accept("AC6 bounds", ok,
           f"steiner {steiner['O']}/{steiner['C']} cap {caps['O']['value']:.4f}/{caps['C']['value']:.4f} "
           f"refined {refined['O']['bound']}/{refined['C']['bound']} tau ratio {tau['ratio']:.6f} {dt:.1f}s")
    assert ok


def test_ac7_properties(accept):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    parts = {}

    # core containment in the cell of random packings
    worst = -np.inf
    for name in ("O", "C", "Q"):
        body = catalog(name)
        U = rng.normal(size=(300, 3))
        U /= np.linalg.norm(U, axis=1)[:, None]
        Y = np.asarray(core_extent(body, U))[:, None] * U
        for _ in range(50):
            X = random_packing(body, rng).points[1:]
            excess = Y @ X.T - 0.5 * np.sum(X * X, axis=1)[None, :]
            worst = max(worst, float(excess.max()))
    parts["core"] = worst <= 1e-8

    # colonies
    U = rng.normal(size=(1000, 3))
    U /= np.linalg.norm(U, axis=1)[:, None]
    ball = bd.Truncater("ball", R1)
    col = bd.colony(ball)
    ball_ok = np.max(np.abs(col.extent(U) - 2 * ball.radial(U))) <= 1e-9
    a = rng.uniform(0, 2 * np.pi, 1000)
    V = np.column_stack([np.cos(a), np.sin(a)])
    box = bd.Truncater("box", k=2.0)
    box_ok = np.all(bd.colony(box).extent(V) >= 2 * box.radial(V) - 1e-12)
    parts["colony"] = bool(ball_ok and box_ok)

    # Gauss-Bonnet against the mesh
    worst_gb = 0.0
    for _ in range(50):
        rho, N, d, region = random_convex_spherical_polygon(rng)
        gb = bd.gauss_bonnet_area(region)
        mesh = bd.strip_area(rho, N, d)
        worst_gb = max(worst_gb, abs(gb - mesh) / mesh)
    parts["gauss-bonnet"] = worst_gb <= 1e-4

    # gradients and homogeneity
    worst_fd, worst_h = 0.0, 0.0
    for name in ("O", "C"):
        cfg = example_config(name)
        G = graph_from_packing(cfg)
        comb = Combinatorics.from_graph(G)
        for _ in range(10):
            X = feasible_seed(name, G, cfg.points[1:], rng, 0.02)
            g = gradient(X, comb)
            fd = central_difference(lambda Z: objective(Z, comb), X)
            worst_fd = max(worst_fd, float(np.max(np.abs(g - fd)) / np.max(np.abs(fd))))
            f = objective(X, comb)
            worst_h = max(worst_h, abs(objective(1.1 * X, comb) - 1.331 * f) / (1.331 * f))
    parts["gradient"] = worst_fd <= 1e-4
    parts["homogeneity"] = worst_h <= 1e-9
    dt = time.perf_counter() - t0
    ok = all(parts.values()) and dt < 300
    accept("AC7 property suites", ok,
           f"core max excess {worst:.1e}; colony {parts['colony']}; GB vs mesh {worst_gb:.1e}; "
           f"gradient {worst_fd:.1e}; homogeneity {worst_h:.1e}; {dt:.1f}s")
    assert ok

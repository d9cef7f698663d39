from __future__ import annotations

import math

import numpy as np
import pytest
from helpers import random_packing
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from localpack.bodies import LAMBDA_1, catalog, core_extent, lattice_cell
from localpack.cell import (
    PointConfig,
    build_cell,
    cell_volume,
    check_packing,
    classify_packing,
    example_config,
    face_area,
    perturb_to_general,
)
from localpack.errors import UnboundedCell
from localpack.geometry import polytope_volume

AXES = [(2, 0, 0), (-2, 0, 0), (0, 2, 0), (0, -2, 0), (0, 0, 2), (0, 0, -2)]


def test_axis_points_give_cube():
    cfg = PointConfig.from_points(AXES, "Q")
    cell = build_cell(cfg)
    assert cell.volume() == pytest.approx(8.0, abs=1e-12)
    assert cell.simple
    assert len(cell.triples()) == 8


def test_origin_is_prepended():
    cfg = PointConfig.from_points(AXES, "Q")
    assert cfg.n == 6 and np.all(cfg.points[0] == 0)


def test_unbounded_cell():
    with pytest.raises(UnboundedCell):
        build_cell(PointConfig.from_points(AXES[:5], "Q"))


def test_packing_condition():
    assert check_packing(PointConfig.from_points(AXES, "Q")) == []
    bad = check_packing(PointConfig.from_points(AXES + [(1.0, 1.0, 0.0)], "Q"))
    assert bad and all(g < 2 for _, _, g in bad)


@pytest.mark.parametrize("name,vol", [("O", 38 / 27), ("C", 196 / 27)])
def test_examples(name, vol):
    cfg = example_config(name)
    assert check_packing(cfg) == []
    cell = build_cell(cfg)
    assert cell.volume() == pytest.approx(vol, abs=1e-12)
    assert cell.polytope.counts() == (24, 36, 14)
    cls = classify_packing(cfg, cell)
    assert cls.reduced and cls.general and cls.simple


def test_cone_volume_matches_polytope_volume():
    cell = build_cell(example_config("C"))
    assert cell_volume(cell) == pytest.approx(polytope_volume(cell.polytope), rel=1e-12)


def test_face_area_of_unit_square():
    sq = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    assert face_area(sq) == pytest.approx(1.0)


def test_lattice_neighbours_reproduce_lattice_cell():
    pts = LAMBDA_1.points_within(4.0)
    cell = build_cell(PointConfig.from_points(pts, "O"))
    ref = lattice_cell(LAMBDA_1).polytope.vertices
    assert len(cell.vertices) == len(ref)
    for v in cell.vertices:
        assert np.min(np.linalg.norm(ref - v, axis=1)) < 1e-9


def test_non_contributing_point_changes_nothing():
    cfg = example_config("O")
    far = PointConfig(np.vstack([cfg.points, [[6.0, 0.5, 0.25]]]), cfg.body)
    a, b = build_cell(cfg), build_cell(far)
    assert 15 not in b.faces
    assert classify_packing(far, b).noncontributing == (15,)
    assert b.volume() == a.volume()
    assert np.array_equal(b.vertices, a.vertices)


def test_adding_a_point_shrinks_the_cell():
    rng = np.random.default_rng(1)
    body = catalog("C")
    for _ in range(10):
        cfg = random_packing(body, rng, count=15)
        big = build_cell(cfg)
        X = cfg.points
        while True:
            y = rng.normal(size=3) * 3
            if np.all(np.asarray(body.gauge(y - X)) >= 2):
                break
        small = build_cell(PointConfig(np.vstack([X, y]), body))
        assert np.all(big.polytope.A @ small.vertices.T <= big.polytope.b[:, None] + 1e-9)
        assert small.volume() <= big.volume() + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_volume_invariant_under_permutation_and_rotation(seed):
    rng = np.random.default_rng(seed)
    cfg = example_config("O")
    vol = build_cell(cfg).volume()
    perm = rng.permutation(cfg.n) + 1
    P = cfg.points[np.concatenate([[0], perm])]
    assert build_cell(PointConfig(P, cfg.body)).volume() == pytest.approx(vol, rel=1e-12)
    R = Rotation.random(random_state=seed % (2 ** 31)).as_matrix()
    assert build_cell(PointConfig(cfg.points @ R.T, cfg.body)).volume() == pytest.approx(vol, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["O", "C", "Q"]))
def test_core_lies_in_cell(seed, name):
    rng = np.random.default_rng(seed)
    body = catalog(name)
    cfg = random_packing(body, rng)
    cell = build_cell(cfg)
    U = rng.normal(size=(400, 3))
    U /= np.linalg.norm(U, axis=1)[:, None]
    Y = np.asarray(core_extent(body, U))[:, None] * U
    P = cell.polytope
    assert np.all(Y @ P.A.T <= P.b + 1e-8)


def test_octahedral_ball_configuration_is_not_simple():
    pts = np.array([(i, j, k) for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)], dtype=float) * 2 / math.sqrt(3)
    cfg = PointConfig.from_points(pts, "B")
    cls = classify_packing(cfg)
    assert cls.reduced and not cls.simple and not cls.general


def test_perturb_to_general():
    pts = np.array([(i, j, k) for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)], dtype=float) * 2 / math.sqrt(3)
    cfg = PointConfig.from_points(pts, "B")
    eps = 0.05
    out = perturb_to_general(cfg, eps, seed=3)
    assert classify_packing(out).general
    assert check_packing(out) == []
    shift = np.linalg.norm(out.points - cfg.points, axis=1)
    assert np.max(shift) <= eps * (1 + np.max(np.linalg.norm(cfg.points, axis=1))) + 1e-12


@pytest.mark.parametrize("eps", [0.0, -0.1, 0.2])
def test_perturb_rejects_bad_eps(eps):
    with pytest.raises(ValueError):
        perturb_to_general(example_config("O"), eps)


def test_config_json_round_trip():
    cfg = example_config("C")
    back = PointConfig.from_json(cfg.to_json())
    assert np.array_equal(back.points, cfg.points) and back.body.name == "C"


def test_cell_neighbours_follow_face_cycles():
    cell = build_cell(example_config("O"))
    for i in cell.faces:
        assert len(cell.neighbors(i)) == len(cell.faces[i])
    assert len(cell.adjacent_pairs()) == 36

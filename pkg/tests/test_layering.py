from __future__ import annotations

import pytest

from layercast import (
    Layering,
    bfs_layering,
    generate_graph,
    mod_coloring,
    read_layering,
    validate,
    write_layering,
)
from layercast.layering import LayeringInputError, format_layering, parse_layering

from conftest import oracle_all_pairs_distances


def test_bfs_on_path_is_valid_stretch_one(path8):
    lay = bfs_layering(path8, 0)
    report = validate(path8, lay)
    assert report.valid
    assert report.stretch == 1
    assert report.depth == 7
    assert lay.layer == {v: v for v in range(8)}


def test_bfs_star_center():
    g = generate_graph("star", {"n": 6}, 0)
    lay = bfs_layering(g, 0)
    assert all(lay.layer[v] == 1 for v in range(1, 6))


def test_bfs_grid_corner_depth_matches_oracle(grid4):
    lay = bfs_layering(grid4, 0)
    dists = oracle_all_pairs_distances(grid4)
    assert validate(grid4, lay).depth == max(dists[0]) == 6


def test_mod3_coloring_of_bfs_is_collision_free(grid4):
    lay = mod_coloring(bfs_layering(grid4, 0), 3)
    report = validate(grid4, lay)
    assert report.valid
    assert report.collision_free is True


def test_two_sources_flagged(path8):
    lay = bfs_layering(path8, 0)
    broken = Layering(0, {**lay.layer, 3: 0}, {v: p for v, p in lay.parent.items() if v != 3})
    report = validate(path8, broken)
    kinds = {v.kind for v in report.violations}
    assert not report.valid
    assert "source-layer" in kinds


def test_same_color_neighbors_flagged(path8):
    lay = bfs_layering(path8, 0)
    color = {v: 0 for v in path8.nodes}
    bad = Layering(0, lay.layer, lay.parent, color, 5)
    report = validate(path8, bad)
    assert report.collision_free is False
    assert any(v.kind == "color-collision" for v in report.violations)


def test_distance_two_same_color_flagged(path8):
    lay = bfs_layering(path8, 0)
    # 2-hop pairs with different layers must differ in color.
    color = {v: (0 if v in (0, 2) else 1 + v % 4) for v in path8.nodes}
    bad = Layering(0, lay.layer, lay.parent, color, 5)
    report = validate(path8, bad)
    assert any(v.kind == "color-collision" and set(v.nodes) == {0, 2} for v in report.violations)


def test_missing_parent_flagged(path8):
    lay = bfs_layering(path8, 0)
    parent = dict(lay.parent)
    del parent[5]
    report = validate(path8, Layering(0, lay.layer, parent))
    assert any(v.kind == "missing-parent" and v.nodes == (5,) for v in report.violations)


def test_parent_must_be_lower_and_adjacent(path8):
    lay = bfs_layering(path8, 0)
    report = validate(path8, Layering(0, lay.layer, {**lay.parent, 3: 4}))
    assert any(v.kind == "parent-not-lower" for v in report.violations)
    report2 = validate(path8, Layering(0, lay.layer, {**lay.parent, 3: 0}))
    assert any(v.kind == "parent-not-neighbor" for v in report2.violations)


def test_missing_assignment_is_input_error(path8):
    with pytest.raises(LayeringInputError):
        validate(path8, Layering(0, {0: 0}, {}))


def test_parent_chain_reaches_source_within_depth(grid4):
    lay = bfs_layering(grid4, 5)
    report = validate(grid4, lay)
    for v in grid4.nodes:
        hops = 0
        cur = v
        while cur != 5:
            cur = lay.parent[cur]
            hops += 1
            assert hops <= report.depth
        assert hops <= report.depth


def test_layering_file_roundtrip(tmp_path, grid4):
    lay = mod_coloring(bfs_layering(grid4, 3), 3)
    path = tmp_path / "layering.txt"
    write_layering(lay, path)
    again = read_layering(path)
    assert again.source == lay.source
    assert again.layer == lay.layer
    assert again.parent == lay.parent
    assert again.color == lay.color
    assert again.color_count == lay.color_count


def test_uncolored_file_roundtrip(path8):
    lay = bfs_layering(path8, 0)
    again = parse_layering(format_layering(lay))
    assert again.color is None
    assert again.layer == lay.layer

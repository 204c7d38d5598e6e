from __future__ import annotations

import pytest

from layercast import RadioGraph, generate_graph


@pytest.fixture
def path8() -> RadioGraph:
    return generate_graph("path", {"n": 8}, 0)


@pytest.fixture
def grid4() -> RadioGraph:
    return generate_graph("grid", {"rows": 4, "cols": 4}, 0)


def oracle_all_pairs_distances(graph: RadioGraph) -> list[list[int]]:
    """Independent distance oracle: textbook queue-free BFS by levels."""
    dists = []
    for s in graph.nodes:
        dist = {s: 0}
        frontier = [s]
        level = 0
        while frontier:
            level += 1
            nxt = []
            for u in frontier:
                for w in graph.neighbors(u):
                    if w not in dist:
                        dist[w] = level
                        nxt.append(w)
            frontier = nxt
        dists.append([dist[v] for v in graph.nodes])
    return dists

import itertools

import numpy as np
import pytest

import ldp_hull as lh


@pytest.fixture(scope="session")
def iso():
    return lh.gaussian([0.0, 0.0], np.eye(2))


@pytest.fixture(scope="session")
def drift():
    return lh.gaussian([1.0, 0.0], np.eye(2))


@pytest.fixture(scope="session")
def two_atoms():
    # drifting two-point law on a vertical segment at x = 1
    return lh.atoms([[1.0, 1.0], [1.0, -1.0]], [0.5, 0.5])


@pytest.fixture(scope="session")
def triangle_atoms():
    return lh.atoms([[1.0, 1.0], [1.0, -1.0], [-1.0, 0.0]], [1 / 3, 1 / 3, 1 / 3])


@pytest.fixture(scope="session")
def square_atoms():
    # centrally symmetric, bounded support, origin interior
    return lh.atoms([[2.0, 2.0], [-2.0, 2.0], [2.0, -2.0], [-2.0, -2.0]], [0.25] * 4)


@pytest.fixture(scope="session")
def graph_gauss():
    return lh.graph1d(1.0, lh.gaussian1d(0.0, 1.0))


@pytest.fixture(scope="session")
def graph_pm1():
    return lh.graph1d(1.0, lh.atoms1d([1.0, -1.0], [0.5, 0.5]))


def brute_force_hull_area(points) -> float:
    """O(n^3) hull: (p, q) is a hull edge iff every other point is on one side."""
    pts = np.asarray(points, float).reshape(-1, 2)
    pts = np.unique(pts, axis=0)
    n = len(pts)
    if n <= 2:
        return 0.0
    edges = []
    for i, j in itertools.permutations(range(n), 2):
        d = pts[j] - pts[i]
        rel = pts - pts[i]
        cr = d[0] * rel[:, 1] - d[1] * rel[:, 0]
        others = np.delete(cr, [i, j])
        if len(others) and np.all(others > 0):
            edges.append((i, j))
    if not edges:
        return 0.0
    nxt = dict(edges)
    start = edges[0][0]
    order = [start]
    while True:
        nx = nxt[order[-1]]
        if nx == start:
            break
        order.append(nx)
    hull = pts[order]
    x, y = hull[:, 0], hull[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

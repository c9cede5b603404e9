import pytest

from hypspin.graphs import build_reference, build_ringed_tree, build_triangulation


@pytest.fixture(scope="session")
def tri5():
    return build_triangulation(7, 5)


@pytest.fixture(scope="session")
def tri4():
    return build_triangulation(7, 4)


@pytest.fixture(scope="session")
def tri8():
    return build_triangulation(7, 8)


def small_corpus():
    """Every graph with at most 12 vertices used for oracle comparisons."""
    return [
        build_reference("path", 1),
        build_reference("path", 3),
        build_reference("cycle", 3),
        build_reference("cycle", 4),
        build_reference("complete", 4),
        build_reference("tree", 2, 2),
        build_ringed_tree(2),
        build_triangulation(7, 1),
        build_reference("grid", 3),
    ]

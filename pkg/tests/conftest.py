import os

import pytest

from plaqed.lattice import build_cluster, cluster_by_name

EXTENDED = bool(os.environ.get("PLAQED_EXTENDED"))


@pytest.fixture(scope="session")
def c8():
    # smallest cluster with nondegenerate plaquettes; used by dense oracles
    return build_cluster(((2, 2), (-2, 2)))


@pytest.fixture(scope="session")
def c16():
    return cluster_by_name("16")


@pytest.fixture(scope="session")
def c20():
    return cluster_by_name("20")


@pytest.fixture(scope="session")
def c32():
    return cluster_by_name("32")


def pytest_collection_modifyitems(config, items):
    if EXTENDED:
        return
    skip = pytest.mark.skip(reason="extended run; set PLAQED_EXTENDED=1")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)

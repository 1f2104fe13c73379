"""python3/tests/conftest.py: Common pytest module for shared pytest fixtures"""
import pytest

from python3.packages.heer.evalbench import SyntheticSpec, generate_synthetic_hin

from .hin_fixtures import bibliographic_graph, write_bibliographic_files


@pytest.fixture()
def bibliographic():
    """The hand-built author/paper/venue/year graph"""
    return bibliographic_graph()


@pytest.fixture()
def bibliographic_files(tmp_path):
    """Schema, node and edge files of the bibliographic graph"""
    return write_bibliographic_files(str(tmp_path))


@pytest.fixture(scope="session")
def small_synthetic():
    """A small incompatible two-semantic HIN"""
    spec = SyntheticSpec.two_semantic(users=120, items=40)
    return generate_synthetic_hin(spec, seed=7)

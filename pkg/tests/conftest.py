import pytest

from maskcalib import SceneSpec, generate


@pytest.fixture(scope="session")
def acceptance_scene():
    """The default synthetic scene shared by the slower end-to-end tests."""
    return generate(SceneSpec())

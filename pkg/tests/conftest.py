import pytest

from dinl.graph import load_reference_topology


@pytest.fixture(scope="session")
def reference():
    """Parsed bundled 10-node reference topology: (graph, cost weights)."""
    return load_reference_topology()

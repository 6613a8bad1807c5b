import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sedrec.synthetic import generate_benchmark


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory) -> Path:
    """Deterministic benchmark stand-in generated once per test session."""
    root = tmp_path_factory.mktemp("benchmark")
    generate_benchmark(root)
    return root


@pytest.fixture(scope="session")
def cnrec_root(request) -> Path:
    """Benchmark root for the quantitative checks.

    Points at a real converted dataset when CNREC_ROOT is set, otherwise at
    the synthetic stand-in with the published corpus statistics.
    """
    env = os.environ.get("CNREC_ROOT")
    if env:
        return Path(env)
    return request.getfixturevalue("synthetic_root")

import os
import sys

import numpy as np
import pytest

# Add the project root to the path so `app` imports work without installation
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from app.core.config import settings  # noqa: E402
from app.models.dataset import DataSet  # noqa: E402
from app.services.opf import load_case  # noqa: E402


@pytest.fixture
def write_file(tmp_path):
    """Write text to a file under tmp_path and return its path."""
    def _write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write


@pytest.fixture
def no_env_seed(monkeypatch):
    monkeypatch.setattr(settings, "CONTOUR_OPT_SEED", None)


@pytest.fixture(scope="session")
def case6():
    return load_case("case6")


@pytest.fixture
def gaussian_cloud():
    rng = np.random.default_rng(3)
    return DataSet.from_arrays(real_part=rng.normal(0.0, 1.0, size=(400, 2)), name="cloud")


@pytest.fixture
def case6_deviations():
    rng = np.random.default_rng(11)
    return DataSet.from_arrays(real_part=rng.normal(0.0, 0.1, size=(300, 2)), name="case6-dev")

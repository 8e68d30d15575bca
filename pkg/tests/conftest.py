import sys
import os
import pytest

# Ensure project root is on sys.path so `app` package is importable when pytest runs.
ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from app.models import ModelGeometry
from app.services import spectra


@pytest.fixture(scope="session")
def bf1():
    return ModelGeometry.bargmann_fock(1)


@pytest.fixture(scope="session")
def bf2():
    return ModelGeometry.bargmann_fock(2, (1, 2))


@pytest.fixture(scope="session")
def cp1():
    return ModelGeometry.projective(1)


@pytest.fixture(scope="session")
def cp2():
    return ModelGeometry.projective(2, (1, 2))


@pytest.fixture(scope="session")
def basis_for():
    """Cached basis builder shared by the whole session."""
    cache = {}

    def build(geom, k, radius=None):
        key = (geom, k, radius)
        if key not in cache:
            cache[key] = spectra.build_weight_basis(geom, k, radius=radius)
        return cache[key]

    return build


@pytest.fixture()
def out_dir(tmp_path, monkeypatch):
    """Send default outputs to a temporary directory."""
    monkeypatch.setattr("app.services.storage.OUTPUT_DIR", str(tmp_path))
    return tmp_path

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from gridgym import load_case, load_chronics  # noqa: E402

CASES = ROOT / "cases"
CHRONICS = ROOT / "chronics"


@pytest.fixture(scope="session")
def repo_root():
    return ROOT


@pytest.fixture(scope="session")
def triangle_case():
    return load_case(CASES / "triangle3.json")


@pytest.fixture(scope="session")
def fig5_case():
    return load_case(CASES / "fig5_5sub.json")


@pytest.fixture(scope="session")
def ieee14_case():
    return load_case(CASES / "ieee14.json")


@pytest.fixture(scope="session")
def ieee14_chronics():
    return load_chronics(CHRONICS / "ieee14_day0")


@pytest.fixture(scope="session")
def fig5_stress_chronics():
    return load_chronics(CHRONICS / "fig5_stress")


@pytest.fixture(scope="session")
def fig5_calm_chronics():
    return load_chronics(CHRONICS / "fig5_calm")

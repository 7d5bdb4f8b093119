import json
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))


@pytest.fixture(scope="session")
def golden():
    with open(TESTS_DIR / "golden" / "golden.json") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def scenario_dir():
    from importlib import resources
    return Path(str(resources.files("overrow.configs") / "scenarios"))

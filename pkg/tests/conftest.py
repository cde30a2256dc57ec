import sys
from pathlib import Path

import pytest

from mbfcost.walk_core import build_table

sys.path.insert(0, str(Path(__file__).parent))

ZERO_NONCE = bytes(16)


@pytest.fixture(scope="session")
def table():
    return build_table(1, 1 << 10)


@pytest.fixture(scope="session")
def table_16():
    return build_table(3, 1 << 16)

from pathlib import Path

import numpy as np
import pytest

VECTOR_DIR = Path(__file__).parent / "vectors"


@pytest.fixture(scope="session")
def vector_dir() -> Path:
    return VECTOR_DIR


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


# 476-bit conditioner column fixture (odd-looking but fixed, not all-zero)
FIXED_COLUMN_HEX = (
    "8eae9d697c36aa95ac833d36b14c8b6ac6ada931a4ab65c555672ad12a2942a5"
    "6e6b55d2539518a538db2554ed2aefae9ccba49554a92c6551bd729"
)


@pytest.fixture(scope="session")
def fixed_column() -> np.ndarray:
    from enrbg.toeplitz import hex_to_bits

    return hex_to_bits(FIXED_COLUMN_HEX)[:476]

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sanisim import GeometryConfig, PageCodec, new_device  # noqa: E402
from sanisim.ftl import Ftl  # noqa: E402

# a geometry small enough for property tests: one 16-bit-data segment code
SMALL = dict(blocks_per_device=4, wordlines_per_block=4, main_bits_per_page=32, spare_bits_per_page=16)


def small_geometry(**overrides) -> GeometryConfig:
    return GeometryConfig(**{**SMALL, **overrides})


def small_codec(t: int = 1) -> PageCodec:
    # m=5, t=1: (31,26) shortened to (21,16); 2 segments x 5 parity bits
    return PageCodec.build(5, t, 2, SMALL["main_bits_per_page"], SMALL["spare_bits_per_page"])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def default_ftl():
    return Ftl(new_device(seed=7), PageCodec.build(10, 5, 4, 2048, 256))


@pytest.fixture
def small_ftl():
    return Ftl(new_device(small_geometry(), seed=3), small_codec(), free_threshold=4)

"""Shared pytest fixtures"""

import textwrap

import pytest

from latentmark.models import CodecName, RngSeed
from latentmark.services.codecs import make_scheme


@pytest.fixture
def seed():
    return RngSeed(master=12345)


@pytest.fixture
def prc_scheme(seed):
    return make_scheme(CodecName.PRC, 256, seed, t=32, w=3, alpha=0.01)


@pytest.fixture
def gs_scheme(seed):
    return make_scheme(CodecName.GAUSSIAN_SHADING, 256, seed, m=32, alpha=0.01)


@pytest.fixture
def write_config(tmp_path):
    """Write dedented TOML text to a file under tmp_path and return its path"""

    def write(text: str, name: str = "scenario.toml"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text).lstrip(), encoding="utf-8")
        return path

    return write

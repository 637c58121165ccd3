from pathlib import Path

import pytest

from rovertwin.core import load_config

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"


def read_config_text(name: str = "default.yaml") -> str:
    return (CONFIG_DIR / name).read_text(encoding="utf-8")


@pytest.fixture
def default_config():
    return load_config(read_config_text())


@pytest.fixture
def config_dir():
    return CONFIG_DIR

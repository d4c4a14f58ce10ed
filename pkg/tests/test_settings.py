from __future__ import annotations

from pathlib import Path

import qdstream
from qdstream.settings import PACKAGE_CONFIGS, Settings


def test_default_configs_ship_inside_the_package(monkeypatch):
    monkeypatch.delenv("QDSTREAM_CONFIGS_DIR", raising=False)
    configs = Path(Settings(_env_file=None).configs_dir)
    assert configs == PACKAGE_CONFIGS
    assert configs.parent == Path(qdstream.__file__).resolve().parent
    for name in ("default.cfg", "voigt_linewidths.cfg", "figures.yaml"):
        assert (configs / name).is_file()


def test_configs_dir_can_be_overridden(monkeypatch, tmp_path):
    monkeypatch.setenv("QDSTREAM_CONFIGS_DIR", str(tmp_path))
    assert Settings(_env_file=None).configs_dir == str(tmp_path)

from __future__ import annotations

import pytest

from qdstream.emitter.params import EmitterParams
from qdstream.io.load_config import load_figures
from qdstream.pipeline.run_config import RunConfig
from qdstream.settings import PACKAGE_CONFIGS

CONFIGS = PACKAGE_CONFIGS


@pytest.fixture
def run(tmp_path) -> RunConfig:
    return RunConfig(
        emitter=EmitterParams(),
        seed=20170614,
        output_dir=tmp_path / "out",
        configs_dir=CONFIGS,
        figures=load_figures(CONFIGS / "figures.yaml"),
    )

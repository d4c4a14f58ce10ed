from __future__ import annotations

import pytest

from qdstream.emitter.params import EmitterParams

SEED = 20170614


@pytest.fixture
def params() -> EmitterParams:
    return EmitterParams()


@pytest.fixture
def seed() -> int:
    return SEED


@pytest.fixture
def fast_noise_params() -> EmitterParams:
    """Short correlation time so a few 10^5 pulses average over many noise realizations."""
    return EmitterParams(tau_c=50e-9, p2=0.0)

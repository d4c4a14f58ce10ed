from __future__ import annotations

from typing import Optional

import pandas as pd

from qdstream.emitter.stream import PhotonStream, apply_losses, generate_stream
from qdstream.pipeline.run_config import RunConfig


def stream_frame(stream: PhotonStream) -> pd.DataFrame:
    return pd.DataFrame({
        "pulse_index": stream.pulse_index,
        "t_emit_ps": stream.t_emit * 1e12,
        "omega_rad_per_s": stream.omega,
        "multiplicity": stream.multiplicity.astype(int),
    })


def cmd_simulate(run: RunConfig, n_pulses: int, eta: Optional[float] = None) -> pd.DataFrame:
    """Raw photon stream for n_pulses, optionally thinned by a transmission eta."""
    stream = generate_stream(run.emitter, n_pulses, run.seed, workers=run.workers, chunk_pulses=run.chunk_pulses)
    if eta is not None:
        stream = apply_losses(stream, eta, run.seed)
    return stream_frame(stream)

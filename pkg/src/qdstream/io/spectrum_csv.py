from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping

from qdstream.reports.exports import read_csv, write_csv
from qdstream.spectra.spectrum import Spectrum


def write_spectrum(path: Path, spectrum: Spectrum, meta: Mapping[str, Any] | None = None) -> None:
    write_csv(path, spectrum.to_frame(), meta={**spectrum.meta, **(meta or {})})


def read_spectrum(path: Path) -> Spectrum:
    df, meta = read_csv(Path(path))
    return Spectrum.from_frame(df, meta=meta)

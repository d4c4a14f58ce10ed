from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from qdstream.emitter.params import EmitterParams
from qdstream.io.load_config import (
    ParsedConfig,
    emitter_params_from_values,
    load_figures,
    read_config,
    validate_config,
)
from qdstream.settings import Settings


@dataclass(frozen=True)
class RunConfig:
    emitter: EmitterParams
    seed: int
    output_dir: Path
    workers: int = 1
    chunk_pulses: int = 65536
    config_path: Optional[Path] = None
    configs_dir: Optional[Path] = None
    figures: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    def config_hash(self) -> str:
        return self.emitter.config_hash()

    def run_hash(self) -> str:
        text = f"{self.emitter.to_config_text()}seed = {self.seed}\n"
        return hashlib.sha1(text.encode("utf-8")).hexdigest()[:12]

    def figure(self, figure_id: str) -> Dict[str, Any]:
        return dict(self.figures.get(figure_id, {}))

    def meta(self, **extra: Any) -> Dict[str, Any]:
        return {"seed": self.seed, "params_hash": self.config_hash(), **extra}


def resolve_config_path(config: Optional[str], settings: Settings) -> Optional[Path]:
    if config:
        return Path(config)
    if settings.config_path:
        return Path(settings.config_path)
    default = Path(settings.configs_dir) / "default.cfg"
    return default if default.exists() else None


def build_run_config(
    settings: Settings,
    *,
    config: Optional[str] = None,
    seed: Optional[int] = None,
    out: Optional[str] = None,
    workers: Optional[int] = None,
) -> Tuple[Optional[RunConfig], Dict[str, Any]]:
    """Parse and validate everything a run needs; the RunConfig is None when any error was found."""
    path = resolve_config_path(config, settings)
    parsed = read_config(path) if path is not None else ParsedConfig(path=None)
    seed = settings.seed if seed is None else seed
    workers = settings.workers if workers is None else workers
    report = validate_config(parsed, seed=seed, workers=workers)
    if report["summary"]["errors"]:
        return None, report

    configs_dir = Path(settings.configs_dir)
    figures_path = configs_dir / "figures.yaml"
    run = RunConfig(
        emitter=emitter_params_from_values(parsed.values),
        seed=int(seed),
        output_dir=Path(out or settings.output_dir),
        workers=int(workers),
        chunk_pulses=settings.chunk_pulses,
        config_path=path,
        configs_dir=configs_dir,
        figures=load_figures(figures_path) if figures_path.exists() else {},
    )
    return run, report

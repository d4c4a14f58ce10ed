from __future__ import annotations

from pathlib import Path

from rich.console import Console

from qdstream.pipeline.figures import cmd_reproduce
from qdstream.pipeline.run_config import build_run_config
from qdstream.settings import get_settings


console = Console()
ROOT = Path(__file__).resolve().parents[1]
OUT_DIR = ROOT / "outputs" / "figures"


def main() -> None:
    run, report = build_run_config(get_settings(), out=str(OUT_DIR))
    if run is None:
        console.print(f"[red]Config invalid: {report['summary']['errors']} error(s)[/red]")
        raise SystemExit(1)

    console.print(f"[bold]Reproducing all figures[/bold] (config {run.config_hash()}, seed {run.seed})")
    for outcome in cmd_reproduce("all", run):
        console.print(f"[green]{outcome.figure_id}[/green] {outcome.title}")
        for key, value in outcome.headline.items():
            console.print(f"  {key}: {value}")
    console.print(f"Wrote: {OUT_DIR}")

if __name__ == "__main__":
    main()

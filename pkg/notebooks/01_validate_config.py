from __future__ import annotations

from pathlib import Path
from datetime import datetime

from rich.console import Console

from qdstream.io.load_config import read_config, validate_config
from qdstream.reports.exports import write_json
from qdstream.settings import PACKAGE_CONFIGS


console = Console()
ROOT = Path(__file__).resolve().parents[1]
CONFIGS = PACKAGE_CONFIGS
OUT_DIR = ROOT / "outputs" / "audit_snapshots"


def main() -> None:
    ts = datetime.now().strftime("%Y%m%d_%H%M%S")
    errors = 0
    console.print("[bold]Config Validation[/bold]")
    for path in sorted(CONFIGS.glob("*.cfg")):
        report = validate_config(read_config(path))
        out_path = OUT_DIR / f"{ts}_{path.stem}_validation_report.json"
        write_json(out_path, report)
        errors += report["summary"]["errors"]
        console.print(f"{path.name}: Errors: {report['summary']['errors']} | Warnings: {report['summary']['warnings']}")
        for issue in report["issues"]:
            console.print(f"  [{issue['severity']}] {issue['code']}: {issue['message']}")
        console.print(f"Wrote: {out_path}")

    if errors > 0:
        raise SystemExit(1)

if __name__ == "__main__":
    main()

from __future__ import annotations

import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from rich.console import Console
from rich.table import Table

from qdstream.errors import InvalidArgumentError, NumericalError
from qdstream.pipeline.budget import budget_chain, budget_table
from qdstream.pipeline.figures import FIGURE_IDS, cmd_reproduce
from qdstream.pipeline.run_config import RunConfig, build_run_config
from qdstream.pipeline.simulate import cmd_simulate
from qdstream.pipeline.sweep import SWEEP_METRICS, SWEEP_PARAMS, cmd_sweep, parse_values
from qdstream.reports.exports import write_csv, write_json
from qdstream.settings import get_settings

console = Console()
err_console = Console(stderr=True)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdstream",
        description="Single-photon source simulator: figure reproduction, photon budget, sweeps.",
    )
    parser.add_argument("--config", help="key = value emitter config (default: the packaged default.cfg)")
    parser.add_argument("--seed", type=int, help="unsigned 64-bit master seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="worker processes for Monte Carlo chunks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reproduce", help="run one figure pipeline (or all) and write CSV + summary.txt")
    p.add_argument("figure", choices=list(FIGURE_IDS) + ["all"])

    sub.add_parser("budget", help="print the photon rate chain")

    p = sub.add_parser("sweep", help="evaluate one metric over values of one emitter parameter")
    p.add_argument("param", choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma-separated values, SI units")
    p.add_argument("--metric", choices=SWEEP_METRICS, default="visibility")
    p.add_argument("--delta-t", type=float, default=None, help="separation for the visibility metric (s)")
    p.add_argument("--n-pulses", type=int, default=1_000_000, help="pulses per value for the g2 metric")

    p = sub.add_parser("validate", help="check the config and report every violation")
    p.add_argument("--json", default=None, help="also write the report to this path")

    p = sub.add_parser("simulate", help="dump the raw photon stream")
    p.add_argument("--n-pulses", type=int, default=10_000)
    p.add_argument("--eta", type=float, default=None, help="transmission applied to the stream")
    return parser


def _issues_table(report: Dict[str, Any]) -> Table:
    t = Table(title="Config validation")
    t.add_column("Severity")
    t.add_column("Code")
    t.add_column("Message")
    for issue in report["issues"]:
        style = "red" if issue["severity"] == "ERROR" else "yellow"
        t.add_row(f"[{style}]{issue['severity']}[/{style}]", issue["code"], issue["message"])
    return t


def _print_report(report: Dict[str, Any]) -> None:
    summary = report["summary"]
    if report["issues"]:
        console.print(_issues_table(report))
    console.print(f"Errors: {summary['errors']} | Warnings: {summary['warnings']}")


def _catalogue_issues(run: RunConfig) -> List[Dict[str, str]]:
    return [
        {"severity": "WARN", "code": "UNKNOWN_FIGURE", "message": f"figures.yaml lists unknown figure id '{fid}'"}
        for fid in run.figures
        if fid not in FIGURE_IDS
    ]


def cmd_validate(run: Optional[RunConfig], report: Dict[str, Any], json_path: Optional[str] = None) -> int:
    """Print every violation; exit code 0 iff the config is valid."""
    if run is not None:
        extra = _catalogue_issues(run)
        report["issues"] += extra
        report["summary"]["warnings"] += len(extra)
    _print_report(report)
    if json_path:
        write_json(Path(json_path), report)
        console.print(f"Wrote: {json_path}")
    if report["summary"]["errors"]:
        console.print("[bold red]Config invalid[/bold red]")
        return EXIT_VALIDATION
    console.print("[bold green]Config valid[/bold green]")
    return EXIT_OK


def _run_reproduce(args: argparse.Namespace, run: RunConfig) -> int:
    outcomes = cmd_reproduce(args.figure, run)
    for outcome in outcomes:
        console.print(f"[bold]Figure {outcome.figure_id}[/bold]: {outcome.title}")
        for line in outcome.lines:
            if line:
                console.print(f"  {line}")
    console.print(f"Wrote: {run.output_dir}")
    return EXIT_OK


def cmd_budget(run: RunConfig) -> int:
    """Print the rate chain and write it to budget.csv."""
    df = budget_chain(run.emitter)
    console.print(budget_table(df))
    path = run.output_dir / "budget.csv"
    write_csv(path, df, run.meta())
    console.print(f"Wrote: {path}")
    return EXIT_OK


def _run_sweep(args: argparse.Namespace, run: RunConfig) -> int:
    values = parse_values(args.values)
    df = cmd_sweep(run, args.param, values, args.metric, delta_t=args.delta_t, n_pulses=args.n_pulses)
    path = run.output_dir / f"sweep_{args.param}_{args.metric}.csv"
    write_csv(path, df, run.meta(param=args.param, metric=args.metric, delta_t=args.delta_t))
    console.print(df.to_string(index=False))
    console.print(f"Wrote: {path}")
    return EXIT_OK


def _run_simulate(args: argparse.Namespace, run: RunConfig) -> int:
    df = cmd_simulate(run, args.n_pulses, args.eta)
    path = run.output_dir / "stream.csv"
    write_csv(path, df, run.meta(n_pulses=args.n_pulses, eta=args.eta))
    console.print(f"{len(df)} photons from {args.n_pulses} pulses")
    console.print(f"Wrote: {path}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    run, report = build_run_config(
        get_settings(), config=args.config, seed=args.seed, out=args.out, workers=args.workers
    )
    if args.command == "validate":
        return cmd_validate(run, report, args.json)
    if run is None:
        _print_report(report)
        err_console.print("[bold red]Config invalid; nothing was computed[/bold red]")
        return EXIT_VALIDATION

    try:
        if args.command == "reproduce":
            return _run_reproduce(args, run)
        if args.command == "budget":
            return cmd_budget(run)
        if args.command == "sweep":
            return _run_sweep(args, run)
        if args.command == "simulate":
            return _run_simulate(args, run)
    except NumericalError as e:
        err_console.print(f"[bold red]Numerical failure[/bold red]: {type(e).__name__}: {e}")
        return EXIT_NUMERICAL
    except InvalidArgumentError as e:
        err_console.print(f"[bold red]Invalid argument[/bold red]: {e}")
        return EXIT_VALIDATION
    parser.print_usage()
    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line interface for star-iscc."""

import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
from rich.console import Console

from star_iscc.config import SCHEME_NAMES, ScenarioConfig, SystemConfig
from star_iscc.harness.experiments import (
    run_beampattern,
    run_convergence,
    run_sweep,
    solve_draw,
    summarize_sweep,
    write_beampattern_csv,
    write_convergence_csv,
    write_sweep_csv,
)
from star_iscc.harness.validate import ValidationPlan, run_validate
from star_iscc.solver.baselines import SchemeKind
from star_iscc.solver.conic import dump_problems
from star_iscc.utils.display import DisplayFormatter
from star_iscc.utils.logging import configure_logging

console = Console()
formatter = DisplayFormatter(console)

PROFILES = ["desk", "paper"]


def _load(config: Optional[Path], profile: str, seed: Optional[int]) -> ScenarioConfig:
    if config:
        scenario = ScenarioConfig.from_file(config, profile)
    else:
        scenario = ScenarioConfig(system=SystemConfig.from_profile(profile))
    return scenario.with_seed(seed)


def _write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)
    return path


def common_options(func: Any) -> Any:
    """Options shared by every subcommand."""
    options = [
        click.option(
            "--config",
            "-c",
            type=click.Path(exists=True, path_type=Path),
            help="Scenario TOML file",
        ),
        click.option(
            "--profile",
            "-p",
            type=click.Choice(PROFILES, case_sensitive=False),
            default="desk",
            help="Base parameter profile (default: desk)",
        ),
        click.option("--seed", "-s", type=click.IntRange(min=0), help="Override every RNG seed"),
        click.option(
            "--out",
            "-o",
            type=click.Path(file_okay=False, path_type=Path),
            default=Path("results"),
            help="Output directory (default: results)",
        ),
        click.option("--verbose", "-v", is_flag=True, help="Debug logging"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group()
@click.version_option(version="0.1.0")
def cli() -> None:
    """star-iscc: STAR-RIS aided sensing, computing and communication optimizer."""
    pass


@cli.command()
@common_options
@click.option(
    "--scheme",
    type=click.Choice(list(SCHEME_NAMES) + ["all"], case_sensitive=False),
    default="proposed_star",
    help="Scheme to solve, or 'all' for a matched-draw comparison",
)
@click.option("--timings", is_flag=True, help="Show and store per-stage timings")
@click.option(
    "--dump-dir",
    type=click.Path(file_okay=False, path_type=Path),
    help="Write every conic program solved to this directory",
)
def run(
    config: Optional[Path],
    profile: str,
    seed: Optional[int],
    out: Path,
    verbose: bool,
    scheme: str,
    timings: bool,
    dump_dir: Optional[Path],
) -> None:
    """Solve one channel draw and write report.json."""
    configure_logging(verbose)
    try:
        cfg = _load(config, profile, seed).system
        names = list(SCHEME_NAMES) if scheme == "all" else [scheme]
        reports = []
        with dump_problems(dump_dir):
            for name in names:
                reports.append(solve_draw(cfg, SchemeKind(name), cfg.rng_seed))

        if len(reports) == 1:
            data: Dict[str, Any] = reports[0].to_dict(include_timings=timings)
            formatter.format_solve_report(reports[0], verbose=verbose)
        else:
            data = {r.scheme: r.to_dict(include_timings=timings) for r in reports}
            formatter.print_scheme_table(reports)
        if timings:
            for report in reports:
                formatter.print_timing_table(report)

        path = _write_text(out / "report.json", formatter.export_json(data) + "\n")
        console.print(f"[green]✓[/green] Report written to {path}")
    except Exception as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise click.Abort()


@cli.command()
@common_options
@click.option("--workers", "-w", type=click.IntRange(min=1), default=1, help="Parallel processes")
def convergence(
    config: Optional[Path],
    profile: str,
    seed: Optional[int],
    out: Path,
    verbose: bool,
    workers: int,
) -> None:
    """Record outer trajectories over the (L, P_u) grid into convergence.csv."""
    configure_logging(verbose)
    try:
        scenario = _load(config, profile, seed)
        rows = run_convergence(scenario.system, scenario.convergence, workers)
        path = write_convergence_csv(rows, out / "convergence.csv")
        console.print(f"[green]✓[/green] {len(rows)} rows written to {path}")
    except Exception as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise click.Abort()


@cli.command()
@common_options
@click.option("--workers", "-w", type=click.IntRange(min=1), default=1, help="Parallel processes")
@click.option("--draws", "-n", type=click.IntRange(min=1), help="Override draws per point")
@click.option("--timings", is_flag=True, help="Include wall time in the CSV")
def sweep(
    config: Optional[Path],
    profile: str,
    seed: Optional[int],
    out: Path,
    verbose: bool,
    workers: int,
    draws: Optional[int],
    timings: bool,
) -> None:
    """Monte Carlo sweep from the scenario's [sweep] section."""
    configure_logging(verbose)
    try:
        scenario = _load(config, profile, seed)
        spec = scenario.sweep
        if draws:
            spec = spec.model_copy(update={"draws": draws})
        rows = run_sweep(spec, scenario.system, workers)
        formatter.print_sweep_table(summarize_sweep(rows), spec.parameter)
        path = write_sweep_csv(rows, out / f"sweep_{spec.parameter}.csv", include_timings=timings)
        console.print(f"[green]✓[/green] {len(rows)} rows written to {path}")
    except Exception as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise click.Abort()


@cli.command()
@common_options
@click.option(
    "--antennas",
    "-a",
    type=click.IntRange(min=1),
    multiple=True,
    help="Antenna count to compare (repeatable)",
)
def beampattern(
    config: Optional[Path],
    profile: str,
    seed: Optional[int],
    out: Path,
    verbose: bool,
    antennas: List[int],
) -> None:
    """Sensing beampattern of the solved beamformer into beampattern.csv."""
    configure_logging(verbose)
    try:
        scenario = _load(config, profile, seed)
        spec = scenario.beampattern
        if antennas:
            spec = spec.model_copy(update={"antenna_counts": list(antennas)})
        rows = run_beampattern(scenario.system, spec)
        formatter.print_beampattern_summary(rows)
        path = write_beampattern_csv(rows, out / "beampattern.csv")
        console.print(f"[green]✓[/green] {len(rows)} rows written to {path}")
    except Exception as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise click.Abort()


@cli.command()
@common_options
@click.option("--quick", is_flag=True, help="Draw only a few instances per check")
def validate(
    config: Optional[Path],
    profile: str,
    seed: Optional[int],
    out: Path,
    verbose: bool,
    quick: bool,
) -> None:
    """Run the self-check suite; exits with status 1 on any failed check."""
    configure_logging(verbose)
    try:
        cfg = _load(config, profile, seed).system
        report = run_validate(cfg, ValidationPlan.quick() if quick else None)
        formatter.print_validation(report)
        path = _write_text(out / "validation.json", formatter.export_json(report.to_dict()) + "\n")
        console.print(f"Validation report written to {path}")
    except Exception as e:
        console.print(f"[bold red]Error:[/bold red] {e}")
        raise click.Abort()

    if report.passed:
        console.print(f"[green]✓[/green] All {len(report.checks)} checks passed")
    else:
        console.print(f"[bold red]✗ {len(report.failures)} check(s) failed[/bold red]")
        sys.exit(1)


if __name__ == "__main__":
    cli()

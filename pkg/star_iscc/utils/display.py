"""Display and formatting utilities using Rich."""

import json
import math
from typing import Any, Dict, Iterable, List, Optional, Sequence

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from star_iscc.config import linear_to_db, watt_to_dbm

MBPS = 1e6


def format_value(value: object) -> str:
    """CSV cell text; floats at 12 significant digits."""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    """Header plus one comma-separated line per row, ``\\n`` terminated."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    return "\n".join(lines) + "\n"


class DisplayFormatter:
    """Format solver and harness output using Rich library."""

    def __init__(self, console: Optional[Console] = None):
        """Initialize formatter with console."""
        self.console = console or Console()

    def _get_status_style(self, status: str) -> str:
        """Get Rich style for a check status or termination reason."""
        if status in ("pass", "converged"):
            return "bold green"
        elif status in ("warn", "max_iterations", "non_improving"):
            return "bold yellow"
        else:
            return "bold red"

    def _get_status_icon(self, status: str) -> str:
        """Get icon for status."""
        if status in ("pass", "converged"):
            return "✓"
        elif status in ("warn", "max_iterations", "non_improving"):
            return "⚠"
        else:
            return "✗"

    def format_solve_report(self, report: Any, verbose: bool = False) -> None:
        """
        Print the summary panel of one solve.

        Args:
            report: SolveReport
            verbose: Also list per-DR rates and STAR amplitudes
        """
        status = report.termination.value
        style = self._get_status_style(status)
        icon = self._get_status_icon(status)
        title = f"{icon} {report.scheme}"

        lines = [
            f"[bold]Sum rate:[/bold] {report.sum_rate / MBPS:.6f} Mbit/s",
            f"[bold]Outer iterations:[/bold] {report.iterations} ({status})",
            f"[bold]Sensing power:[/bold] {_dbm_text(report.rates.p_sense)}",
            f"[bold]Compute power:[/bold] {_dbm_text(float(sum(report.rates.p_compute)))}",
        ]
        if report.sensing_sinr > 0:
            lines.append(f"[bold]Sensing SINR:[/bold] {linear_to_db(report.sensing_sinr):.2f} dB")
        lines.append(
            "[bold]Rank residuals:[/bold] "
            + ", ".join(f"{r:.2e}" for r in report.penalty_residuals)
        )
        if report.extraction_loss > 0:
            lines.append(f"[bold]Extraction loss:[/bold] {report.extraction_loss:.2e}")

        if verbose:
            rates = ", ".join(f"{r / MBPS:.4f}" for r in report.rates.r_dr)
            lines.append(f"[bold]DR rates (Mbit/s):[/bold] {rates}")
            lines.append(
                "[bold]Transmission amplitudes:[/bold] "
                + " ".join(f"{a:.2f}" for a in report.star.amp_t)
            )

        self.console.print(Panel("\n".join(lines), title=title, border_style=style.split()[1]))

    def create_timing_table(self, report: Any) -> Table:
        """
        Create table of per-stage wall-clock times.

        Args:
            report: SolveReport

        Returns:
            Rich Table
        """
        table = Table(title="Stage Timings", box=box.ROUNDED)
        table.add_column("Stage", style="cyan")
        table.add_column("Seconds", justify="right")
        for stage, seconds in report.timings.items():
            table.add_row(stage, f"{seconds:.3f}")
        return table

    def print_timing_table(self, report: Any) -> None:
        """Print timing table."""
        self.console.print(self.create_timing_table(report))

    def create_scheme_table(self, reports: Sequence[Any]) -> Table:
        """
        Create side-by-side table of schemes solved on one draw.

        Args:
            reports: SolveReports, one per scheme

        Returns:
            Rich Table
        """
        table = Table(title="Scheme Comparison", box=box.ROUNDED)

        table.add_column("Scheme", style="cyan", no_wrap=True)
        table.add_column("Sum Rate (Mbit/s)", justify="right")
        table.add_column("Sensing SINR (dB)", justify="right")
        table.add_column("Iterations", justify="right")
        table.add_column("Status", justify="center")

        for report in reports:
            status = report.termination.value
            style = self._get_status_style(status)
            sinr = f"{linear_to_db(report.sensing_sinr):.2f}" if report.sensing_sinr > 0 else "-"
            table.add_row(
                report.scheme,
                f"{report.sum_rate / MBPS:.6f}",
                sinr,
                str(report.iterations),
                f"[{style}]{self._get_status_icon(status)} {status}[/{style}]",
            )
        return table

    def print_scheme_table(self, reports: Sequence[Any]) -> None:
        """Print scheme comparison table."""
        self.console.print(self.create_scheme_table(reports))

    def create_sweep_table(self, summaries: Sequence[Any], parameter: str) -> Table:
        """
        Create table of sweep means and standard errors.

        Args:
            summaries: SweepSummary entries
            parameter: Swept parameter name

        Returns:
            Rich Table
        """
        table = Table(title=f"Sweep over {parameter}", box=box.ROUNDED)

        table.add_column("Scheme", style="cyan", no_wrap=True)
        table.add_column(parameter, justify="right")
        table.add_column("Mean (Mbit/s)", justify="right")
        table.add_column("Std. Error", justify="right")
        table.add_column("Draws", justify="right")

        for s in summaries:
            mean = "-" if math.isnan(s.mean_bps) else f"{s.mean_bps / MBPS:.6f}"
            draws = f"{s.draws - s.failures}/{s.draws}"
            if s.failures:
                draws = f"[yellow]{draws}[/yellow]"
            table.add_row(s.scheme, f"{s.value:g}", mean, f"{s.stderr_bps / MBPS:.6f}", draws)
        return table

    def print_sweep_table(self, summaries: Sequence[Any], parameter: str) -> None:
        """Print sweep summary table."""
        self.console.print(self.create_sweep_table(summaries, parameter))

    def create_validation_table(self, report: Any) -> Table:
        """
        Create table of validation checks.

        Args:
            report: ValidationReport

        Returns:
            Rich Table
        """
        table = Table(title="Validation", box=box.ROUNDED)

        table.add_column("Check", style="cyan", no_wrap=True)
        table.add_column("Status", justify="center")
        table.add_column("Value", justify="right")
        table.add_column("Threshold", justify="right")
        table.add_column("Note", style="white")

        for check in report.checks:
            status = check.status.value
            style = self._get_status_style(status)
            value = "-" if math.isnan(check.value) else f"{check.value:.3e}"
            table.add_row(
                check.name,
                f"[{style}]{self._get_status_icon(status)} {status.upper()}[/{style}]",
                value,
                f"{check.threshold:.1e}",
                check.message,
            )
        return table

    def print_validation(self, report: Any) -> None:
        """Print validation table and the oracle gaps."""
        self.console.print(self.create_validation_table(report))
        if report.oracle:
            table = Table(title="Tiny-Instance Oracle", box=box.ROUNDED)
            table.add_column("Seed", justify="right")
            table.add_column("AO (bit/s)", justify="right")
            table.add_column("Grid (bit/s)", justify="right")
            table.add_column("Ratio", justify="right")
            for gap in report.oracle:
                table.add_row(
                    str(gap.seed), f"{gap.ao_bps:.6e}", f"{gap.oracle_bps:.6e}", f"{gap.ratio:.4f}"
                )
            self.console.print(table)

    def print_beampattern_summary(self, rows: Sequence[Any]) -> None:
        """Print peak angle and null depths per antenna count."""
        table = Table(title="Beampattern", box=box.ROUNDED)
        table.add_column("Antennas", justify="right", style="cyan")
        table.add_column("Peak (deg)", justify="right")
        table.add_column("Target gain (dB)", justify="right")
        table.add_column("Worst interferer (dB)", justify="right")

        by_count: Dict[int, List[Any]] = {}
        for row in rows:
            by_count.setdefault(row.n_antennas, []).append(row)
        for count, group in by_count.items():
            peak = max(group, key=lambda r: r.gain)
            target = [r.gain_db for r in group if r.marker == "target"]
            nulls = [r.gain_db for r in group if r.marker == "interferer"]
            table.add_row(
                str(count),
                f"{peak.angle_deg:g}",
                f"{target[0]:.2f}" if target else "-",
                f"{max(nulls):.2f}" if nulls else "-",
            )
        self.console.print(table)

    def export_json(self, data: Dict[str, Any]) -> str:
        """
        Export a report dictionary to JSON.

        Args:
            data: JSON-ready mapping

        Returns:
            JSON string with sorted keys
        """
        return json.dumps(data, indent=2, sort_keys=True)


def _dbm_text(watt: float) -> str:
    if watt <= 0:
        return "0 W"
    return f"{watt_to_dbm(watt):.2f} dBm"

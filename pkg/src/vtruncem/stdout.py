"""
STDOUT Module for vtruncem

Console output for the CLI: banner, report tables, progress over Monte
Carlo chunks, and the log level that goes with each output mode.
"""

import logging
import time
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence

from rich.console import Console
from rich.markup import escape
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from .core.validation import ValidationReport
from .models.bundle import ModelBundle
from .montecarlo.estimators import ErrorReport, MomentReport, StabilityReport
from .schemes.simulation import PathResult
from .utils.console_helper import SafeConsole


class OutputMode(Enum):
    """Output modes for different display types"""

    NORMAL = "normal"
    QUIET = "quiet"
    VERBOSE = "verbose"
    DEBUG = "debug"

    @property
    def log_level(self) -> int:
        return {
            OutputMode.QUIET: logging.ERROR,
            OutputMode.NORMAL: logging.WARNING,
            OutputMode.VERBOSE: logging.INFO,
            OutputMode.DEBUG: logging.DEBUG,
        }[self]


def _num(value: Optional[float], spec: str = ".6g") -> str:
    return "-" if value is None else format(value, spec)


class STDOUTHandler:
    """
    Handles all console output for vtruncem
    Provides report tables, progress tracking and status messages
    """

    def __init__(self, mode: OutputMode = OutputMode.NORMAL, use_colors: bool = True, console: Optional[Console] = None):
        self.mode = mode
        self.use_colors = use_colors
        rich_console = console if console is not None else Console(color_system="auto" if use_colors else None)
        self.console = SafeConsole(rich_console)
        self.start_time = time.time()
        self.current_progress: Optional[Progress] = None
        self.progress_task = None

    @property
    def quiet(self) -> bool:
        return self.mode == OutputMode.QUIET

    def print_banner(self):
        if self.quiet:
            return
        from . import __version__

        self.console.print(f"[bold blue]vtruncem {__version__}[/bold blue] V-truncated Euler-Maruyama schemes")

    def start_progress(self, total: int, description: str = "Simulating"):
        """Start progress tracking"""
        if self.quiet or total <= 0:
            return
        self.current_progress = Progress(
            TextColumn("{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            console=self.console.rich,
            transient=True,
        )
        self.current_progress.start()
        self.progress_task = self.current_progress.add_task(description, total=total)

    def update_progress(self, advance: int = 1):
        """Update progress"""
        if self.current_progress and self.progress_task is not None:
            self.current_progress.update(self.progress_task, advance=advance)

    def stop_progress(self):
        """Stop progress tracking"""
        if self.current_progress:
            self.current_progress.stop()
            self.current_progress = None
            self.progress_task = None

    def print_error(self, message: str, error: Optional[Exception] = None):
        self.console.print(f"[red][-] Error: {message}[/red]", highlight=False)
        if error and self.mode == OutputMode.DEBUG:
            self.console.print(f"[red][-] {type(error).__name__}: {error}[/red]", highlight=False)

    def print_warning(self, message: str):
        if not self.quiet:
            self.console.print(f"[yellow][!] Warning: {message}[/yellow]", highlight=False)

    def print_info(self, message: str):
        if not self.quiet:
            self.console.print(f"[blue][+] {message}[/blue]", highlight=False)

    def print_debug(self, message: str):
        if self.mode == OutputMode.DEBUG:
            self.console.print(f"[dim][DEBUG] {escape(message)}[/dim]", highlight=False)

    def _key_values(self, title: str, values: Dict[str, str]):
        table = Table(title=title, show_header=False)
        table.add_column("Key", style="cyan")
        table.add_column("Value", style="green")
        for key, value in values.items():
            table.add_row(key, value)
        self.console.print(table)

    def print_models(self, bundles: Iterable[ModelBundle]):
        table = Table(title="Built-in models", show_header=True, header_style="bold blue")
        for column in ("name", "d", "m", "variant", "Δ*", "x0"):
            table.add_column(column)
        for bundle in bundles:
            summary = bundle.summary()
            table.add_row(*(summary[key] for key in ("name", "d", "m", "variant", "delta_star", "x0")))
        self.console.print(table)

    def print_validation(self, model: str, reports: Sequence[ValidationReport]):
        table = Table(title=f"Validation of {model}", show_header=True, header_style="bold blue")
        for column in ("check", "result", "checked", "skipped", "failures", "worst ratio"):
            table.add_column(column)
        for report in reports:
            result = "[green]✓ pass[/green]" if report.passed else "[red]✗ FAIL[/red]"
            table.add_row(report.name, result, str(report.checked), str(report.skipped), str(report.failures), _num(report.worst_ratio))
        self.console.print(table)
        for report in reports:
            if not report.passed:
                self.print_error(report.summary())
            elif self.mode in (OutputMode.VERBOSE, OutputMode.DEBUG):
                for note in report.notes:
                    self.print_info(f"{report.name}: {note}")

    def print_path(self, path: PathResult):
        if self.quiet:
            return
        values = {
            "scheme": path.scheme_kind.value,
            "Δ": _num(path.dt),
            "steps": str(path.n_steps),
            "Y(T)": ", ".join(_num(c) for c in path.terminal_state),
            "max |Y_k|": _num(path.max_norm),
        }
        if path.radius is not None:
            values["radius"] = _num(path.radius)
            values["truncated steps"] = str(int(path.truncated_flags.sum()))
            values["first truncation"] = "-" if path.first_truncation_step is None else str(path.first_truncation_step)
        if path.diverged:
            values["diverged at step"] = str(path.diverged_at)
        self._key_values(f"Path {path.path_id} (seed {path.seed})", values)

    def print_error_report(self, report: ErrorReport):
        table = Table(title=f"Strong error, q={report.q:g}, Δ_ref={report.dt_ref:g}", show_header=True, header_style="bold blue")
        for column in ("Δ", "mean error", "stderr", "paths"):
            table.add_column(column)
        with_u = any(row.u_metric is not None for row in report.rows)
        if with_u:
            table.add_column("mean U")
        for row in report.rows:
            cells = [_num(row.dt), _num(row.mean_error), _num(row.stderr), str(row.paths)]
            if with_u:
                cells.append(_num(row.u_metric))
            table.add_row(*cells)
        self.console.print(table)
        self.console.print(f"[bold]fitted slope:[/bold] {_num(report.slope, '.4f')}", highlight=False)
        for note in report.notes:
            self.print_warning(note)

    def print_moment_report(self, report: MomentReport):
        table = Table(title=f"sup_k mean V^ρ(Y_k), ρ={report.rho:g}", show_header=True, header_style="bold blue")
        for column in ("Δ", "sup moment", "stderr", "argmax step", "paths"):
            table.add_column(column)
        for row in report.rows:
            table.add_row(_num(row.dt), _num(row.sup_moment), _num(row.stderr), str(row.argmax_step), str(row.paths))
        self.console.print(table)

    def print_stability_report(self, report: StabilityReport):
        values = {
            "Δ": _num(report.dt),
            "T": _num(report.horizon),
            "paths": str(report.paths),
            "radius": _num(report.radius),
            "within radius": f"{100 * report.bounded_fraction:.1f}%",
            f"converged (< {report.threshold:g})": f"{100 * report.converged_fraction:.1f}%",
            "median log-V slope": _num(report.median_lyap_slope, ".4f"),
            "slope stderr": _num(report.lyap_slope_stderr, ".3g"),
            "mean-moment slope": _num(report.mean_moment_slope, ".4f"),
        }
        if report.classical_divergence_fraction is not None:
            values["classical EM diverged"] = f"{100 * report.classical_divergence_fraction:.1f}%"
        self._key_values(f"Stability of {report.model}", values)

    def print_elapsed(self):
        if not self.quiet:
            self.console.print(f"[dim]elapsed {time.time() - self.start_time:.2f} s[/dim]", highlight=False)

    def set_mode(self, mode: OutputMode):
        self.mode = mode


stdout_handler: Optional[STDOUTHandler] = None


def get_stdout_handler(mode: OutputMode = OutputMode.NORMAL, use_colors: bool = True) -> STDOUTHandler:
    """Get or create the global stdout handler"""
    global stdout_handler
    if stdout_handler is None:
        stdout_handler = STDOUTHandler(mode, use_colors)
    return stdout_handler


def set_output_mode(mode: OutputMode):
    get_stdout_handler().set_mode(mode)

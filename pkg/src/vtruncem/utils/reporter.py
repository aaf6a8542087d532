"""
Reporter Module

Writes estimator reports, path records and validation results as CSV.
Every file starts with a header row; floats are written with 17
significant digits so doubles round-trip exactly.
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from ..core.validation import ValidationReport
from ..errors import ConfigError
from ..montecarlo.estimators import ErrorReport, MomentReport, StabilityReport
from ..schemes.simulation import PathResult

logger = logging.getLogger(__name__)

ERROR_COLUMNS = ["dt", "mean_error", "stderr", "paths", "q"]
MOMENT_COLUMNS = ["dt", "sup_moment", "argmax_step", "stderr", "paths"]
STABILITY_COLUMNS = ["path_id", "scheme", "terminal_norm", "max_vrho", "lyap_slope", "diverged", "first_truncation_step"]
VALIDATION_COLUMNS = ["check", "passed", "checked", "skipped", "failures", "worst_ratio"]

Report = Union[ErrorReport, MomentReport, StabilityReport, PathResult, Sequence[ValidationReport]]


def format_value(value) -> str:
    """CSV cell text: '' for None, 0/1 for booleans, %.17g for floats."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


class Reporter:
    """
    CSV writer for vtruncem results

    Supports error, moment and stability reports, single path records and
    lists of validation reports.
    """

    def __init__(self, output_dir: Optional[str] = None):
        """
        Initialize Reporter

        Args:
            output_dir: Directory relative file names are resolved against
        """
        self.output_dir = Path(output_dir) if output_dir else None

    def _resolve(self, filename) -> Path:
        path = Path(filename)
        if self.output_dir is not None and not path.is_absolute():
            path = self.output_dir / path
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def _write_rows(self, filename, header: List[str], rows: Iterable[Sequence]) -> str:
        path = self._resolve(filename)
        count = 0
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(cell) for cell in row])
                count += 1
        logger.info("wrote %d rows to %s", count, path)
        return str(path)

    def write(self, report: Report, filename) -> str:
        """
        Write any supported result to CSV

        Returns:
            Path of the written file
        """
        if isinstance(report, ErrorReport):
            return self.write_error_report(report, filename)
        if isinstance(report, MomentReport):
            return self.write_moment_report(report, filename)
        if isinstance(report, StabilityReport):
            return self.write_stability_report(report, filename)
        if isinstance(report, PathResult):
            return self.write_path(report, filename)
        if isinstance(report, (list, tuple)) and all(isinstance(r, ValidationReport) for r in report):
            return self.write_validation(report, filename)
        raise ConfigError(f"no CSV layout for {type(report).__name__}")

    def write_error_report(self, report: ErrorReport, filename) -> str:
        with_u = any(row.u_metric is not None for row in report.rows)
        header = ERROR_COLUMNS + (["u_metric", "u_stderr"] if with_u else [])
        rows = (
            [row.dt, row.mean_error, row.stderr, row.paths, row.q] + ([row.u_metric, row.u_stderr] if with_u else [])
            for row in report.rows
        )
        return self._write_rows(filename, header, rows)

    def write_moment_report(self, report: MomentReport, filename) -> str:
        rows = ([row.dt, row.sup_moment, row.argmax_step, row.stderr, row.paths] for row in report.rows)
        return self._write_rows(filename, MOMENT_COLUMNS, rows)

    def write_stability_report(self, report: StabilityReport, filename) -> str:
        rows = (
            [r.path_id, r.scheme, r.terminal_norm, r.max_vrho, r.lyap_slope, r.diverged, r.first_truncation_step]
            for r in report.rows
        )
        return self._write_rows(filename, STABILITY_COLUMNS, rows)

    def write_path(self, path: PathResult, filename) -> str:
        dim = path.initial_state.shape[0]
        header = ["step", "t"] + [f"y_{i + 1}" for i in range(dim)] + ["v", "truncated"]
        return self._write_rows(filename, header, path.rows())

    def write_validation(self, reports: Sequence[ValidationReport], filename) -> str:
        rows = (
            [r.name, r.passed, r.checked, r.skipped, r.failures, r.worst_ratio]
            for r in reports
        )
        return self._write_rows(filename, VALIDATION_COLUMNS, rows)

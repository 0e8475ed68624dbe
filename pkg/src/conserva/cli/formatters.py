"""Output formatters for the CLI."""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import pandas as pd

from ..bench.metrics import format_metric
from ..bench.report import RunReport


class OutputFormatter:
    """Format CLI output with consistent styling"""

    @staticmethod
    def format_header(title: str, status: str = "INFO") -> str:
        """Format a header box"""
        status_icon = {
            "SUCCESS": "✅",
            "ERROR": "❌",
            "INFO": "ℹ️",
            "WARNING": "⚠️"
        }.get(status, "ℹ️")

        return f"""
╔══════════════════════════════════════════════════════════════════╗
║  {status_icon} {title.upper()}
╚══════════════════════════════════════════════════════════════════╝
"""

    @staticmethod
    def _constancy(value: Optional[float]) -> str:
        return "n/a" if value is None else f"{value:.3e}"

    @staticmethod
    def format_audit(rows: Sequence[Dict[str, Any]], title: str = "GROUND-TRUTH AUDIT") -> str:
        """One line per dataset: system, trajectories, test constancy of the true invariant"""
        header = OutputFormatter.format_header(title, "SUCCESS" if rows else "WARNING")
        if not rows:
            return f"{header}\n➤ No datasets found\n"
        lines = [f"  {'system':<16} {'n_traj':>7} {'T':>6}  test constancy"]
        for row in rows:
            lines.append(f"  {row['system']:<16} {row['n_traj']:>7} {row['T']:>6}  "
                         f"{OutputFormatter._constancy(row['constancy'])}")
        return f"{header}\n" + "\n".join(lines) + "\n"

    @staticmethod
    def format_report(report: RunReport, out_dir: Optional[Path] = None) -> str:
        """Accepted laws and metrics of one run"""
        m = report.metrics
        if report.accepted_laws:
            laws = "\n".join(f"  • {law}" for law in report.accepted_laws)
        else:
            laws = "  • no law"
        location = f"\n➤ Written to: {out_dir}" if out_dir is not None else ""
        header = OutputFormatter.format_header(f"{report.system} seed {report.seed}", "SUCCESS")
        return f"""{header}
📋 Accepted laws:
{laws}
📊 Metrics:
➤ DR / FDR / F1: {m['dr']:.2f} / {m['fdr']:.2f} / {m['f1']:.2f}
➤ Candidates: {len(report.candidates)} (accepted {m['accepted']})
➤ Best test constancy: {OutputFormatter._constancy(m.get('best_constancy'))}
➤ Selected restart: {report.selected_restart} of {report.restarts}{location}
"""

    @staticmethod
    def format_summary(system: str, summary: pd.DataFrame) -> str:
        """Mean ± std over seeds"""
        header = OutputFormatter.format_header(f"{system} over seeds", "INFO")
        lines = [f"➤ {row['metric']}: {format_metric(row['mean'], row['std'])} (n={row['n']})"
                 for row in summary.to_dict("records")]
        return f"{header}\n" + "\n".join(lines) + "\n"

    @staticmethod
    def format_table(title: str, frame: pd.DataFrame, path: Optional[Path] = None) -> str:
        header = OutputFormatter.format_header(title, "SUCCESS")
        body = frame.to_string(index=False) if len(frame) else "(empty)"
        location = f"\n➤ Written to: {path}" if path is not None else ""
        return f"{header}\n{body}{location}\n"

    @staticmethod
    def format_error(error: str) -> str:
        """Format error message"""
        header = OutputFormatter.format_header("ERROR", "ERROR")
        return f"""{header}
❗ Error Details:
➤ {error}
"""

    @staticmethod
    def format_error_record(command: Optional[str], error: BaseException) -> str:
        """Machine-readable error line"""
        return json.dumps({
            "status": "error",
            "command": command,
            "error_type": type(error).__name__,
            "error": str(error),
        }, sort_keys=True)

    @staticmethod
    def format_progress(step: int, total: int, message: str) -> str:
        """Format progress message"""
        progress = "=" * (step * 20 // total)
        remaining = " " * (20 - len(progress))
        percentage = step * 100 // total

        return f"""
Progress: [{progress}{remaining}] {percentage}%
➤ {message}
"""

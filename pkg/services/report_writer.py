import json
import os
import tempfile
from datetime import datetime, timezone
from typing import Callable, Dict, List, Any, Optional, TextIO

import pandas as pd

from config import Config
from services.config_parser import RunConfig
from services.verification import SuiteResult
from utils.logger import get_logger

logger = get_logger(__name__)


class ReportWriter:
    """Write run tables, the PASS/FAIL report and a JSON summary into one output directory"""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = Config.ensure_directories(output_dir)
        self.float_format = Config.FLOAT_FORMAT

    def path(self, key: str) -> str:
        return os.path.join(self.output_dir, Config.OUTPUT_FILES[key])

    def write_outputs(self, result: SuiteResult, cfg: RunConfig, status: int) -> List[str]:
        """Write every table in the result plus report.txt and summary.json"""
        try:
            output_files = [self.write_table(df, key) for key, df in sorted(result.tables.items())]
            output_files.append(self.write_report(result, cfg))
            output_files.append(self.write_summary(result, cfg, status, output_files))
            logger.info(f"Generated {len(output_files)} output files in {self.output_dir}")
            return output_files
        except Exception as e:
            logger.error(f"Error writing outputs to {self.output_dir}: {str(e)}")
            raise

    def write_table(self, df: pd.DataFrame, key: str) -> str:
        path = self.path(key)
        self._atomic_write(path, lambda f: df.to_csv(f, index=False, float_format=self.float_format,
                                                     lineterminator='\n'))
        logger.debug(f"Wrote {len(df)} rows to {path}")
        return path

    def write_report(self, result: SuiteResult, cfg: RunConfig) -> str:
        path = self.path('report')
        self._atomic_write(path, lambda f: f.write(format_report(result, cfg)))
        return path

    def write_summary(self, result: SuiteResult, cfg: RunConfig, status: int, files: List[str]) -> str:
        summary = {
            'generated_at': datetime.now(timezone.utc).isoformat(),
            'command': cfg.command,
            'exit_status': status,
            'checks': {
                'total': len(result.checks),
                'passed': sum(c.passed for c in result.checks),
                'failed': [c.name for c in result.checks if not c.passed],
            },
            'results': [c.to_dict() for c in result.checks],
            'files': [os.path.basename(f) for f in files],
            'config': cfg.to_dict(),
        }
        path = self.path('summary')
        self._atomic_write(path, lambda f: json.dump(summary, f, indent=2, default=str))
        return path

    def _atomic_write(self, path: str, write: Callable[[TextIO], Any]):
        """Write to a temporary file in the target directory, then rename over the target"""
        fd, tmp_path = tempfile.mkstemp(dir=self.output_dir, prefix='.', suffix='.tmp')
        try:
            with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
                write(f)
            os.replace(tmp_path, path)
        except Exception:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            raise


def format_report(result: SuiteResult, cfg: RunConfig) -> str:
    passed = sum(c.passed for c in result.checks)
    lines = [
        f"command: {cfg.command}",
        f"medium: {_fields(cfg.medium.to_dict())}",
        f"oscillator: {_fields(cfg.oscillator.to_dict())}",
        f"quadrature: rel_tol={cfg.quadrature.rel_tol:g} abs_tol={cfg.quadrature.abs_tol:g} "
        f"max_subdivisions={cfg.quadrature.max_subdivisions} tail_cut={cfg.quadrature.tail_cut:g}",
    ]
    if cfg.sweep is not None:
        lines.append(f"sweep: {cfg.sweep.parameter} over {list(cfg.sweep.values)}")
    lines.append('')
    lines.extend(c.line() for c in result.checks)
    lines.append('')
    lines.append(f"{passed}/{len(result.checks)} checks passed")
    if result.notes:
        lines.append('')
        lines.append('notes:')
        lines.extend(f"  {note}" for note in result.notes)
    return "\n".join(lines) + "\n"


def _fields(values: Dict[str, Any]) -> str:
    return ' '.join(f"{k}={v}" for k, v in values.items())

import os
from dataclasses import replace

import pandas as pd

from config import Config
from services.config_parser import RunConfig
from services.report_writer import ReportWriter
from services.verification import CheckResult, SuiteResult, run_suites
from utils.errors import ConfigError, FieldQuantError
from utils.logger import get_logger, attach_run_log, detach_run_log

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2


def run_sweep(cfg: RunConfig) -> SuiteResult:
    """Run the command once per sweep value; tables gain a leading sweep column"""
    sweep = cfg.sweep
    combined = SuiteResult(command=cfg.command)
    tables = {}
    for value in sweep.values:
        point = replace(cfg.with_parameter(sweep.parameter, value), sweep=None)
        label = f"{sweep.parameter}={value:g}"
        logger.info(f"Sweep point {label}")
        result = run_suites(point)
        combined.checks.extend(replace(c, name=f"[{label}] {c.name}") for c in result.checks)
        combined.notes.extend(f"[{label}] {note}" for note in result.notes)
        for key, df in result.tables.items():
            tagged = df.copy()
            tagged.insert(0, sweep.parameter, value)
            tables.setdefault(key, []).append(tagged)
    combined.tables = {key: pd.concat(frames, ignore_index=True) for key, frames in tables.items()}
    return combined


def run(cfg: RunConfig) -> int:
    """Dispatch cfg.command, write its files and return the exit status"""
    try:
        output_dir = Config.ensure_directories(cfg.output_dir)
    except OSError as e:
        logger.error(f"Output directory {cfg.output_dir} unusable: {str(e)}")
        return EXIT_CONFIG_ERROR

    log_path = os.path.join(output_dir, Config.OUTPUT_FILES['log'])
    attached = attach_run_log(log_path)
    logger.info(f"Starting {cfg.command} run into {output_dir}")
    try:
        try:
            result = run_sweep(cfg) if cfg.sweep is not None else run_suites(cfg)
        except ConfigError as e:
            logger.error(f"Invalid configuration: {e}")
            return EXIT_CONFIG_ERROR
        except FieldQuantError as e:
            logger.error(f"Error running {cfg.command}: {str(e)}")
            result = SuiteResult(command=cfg.command)
            result.checks.append(CheckResult(name=cfg.command, identity='command completed', passed=False,
                                             residual=float('nan'), tolerance=float('nan'),
                                             detail=f"{type(e).__name__}: {str(e)}"))

        status = EXIT_OK if result.checks and result.passed else EXIT_CHECK_FAILED
        ReportWriter(output_dir).write_outputs(result, cfg, status)
        for check in result.checks:
            if not check.passed:
                logger.error(f"Check failed: {check.line()}")
        logger.info(f"{cfg.command} finished with status {status}")
        return status
    finally:
        for name in attached:
            detach_run_log(name)

"""Command-line front end: run the suites, write the report, print the summary"""

import argparse
import logging
import sys
from typing import List, Optional

from abnorm.config.settings import COMMANDS, DEFAULT_TOLERANCES, WORKLOADS, CommandConfig, Config, parse_exponent
from abnorm.core.errors import InvalidConfigError
from abnorm.handlers.suites import HANDLERS
from abnorm.models.report import CheckRecord, Report
from abnorm.utils.helpers import setup_logging, timed
from abnorm.utils.serialization import write_text
from locales.en import format_values, get_message

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='abnorm',
        description='Numerical checks around the Beurling-Ahlfors L^p norm',
    )
    parser.add_argument('--command', choices=list(COMMANDS), help='suite to run (default: all)')
    parser.add_argument('--p', action='append', type=parse_exponent, dest='p_list', metavar='P',
                        help='exponent such as 1.5 or 4/3, repeatable')
    parser.add_argument('--grid-min', type=float)
    parser.add_argument('--grid-max', type=float)
    parser.add_argument('--grid-n', type=int)
    parser.add_argument('--field-n', type=int)
    parser.add_argument('--extent', type=float)
    parser.add_argument('--seed', type=int)
    parser.add_argument('--out', dest='output_path', help='JSON report path')
    parser.add_argument('--config', help='key = value file applied before the flags')
    parser.add_argument('--db', dest='database_url', help='SQLAlchemy URL for the run history')
    parser.add_argument('--artifacts', dest='artifact_dir', help='directory for norm estimates and witnesses')
    parser.add_argument('--log-level', help='DEBUG, INFO, WARNING, ...')
    parser.add_argument('--log-to-file', action='store_true', default=None)
    parser.add_argument('--print-config', action='store_true', help='print the effective configuration')
    for name in DEFAULT_TOLERANCES:
        parser.add_argument(f"--tol-{name.replace('_', '-')}", type=float, dest=f'tol_{name}', metavar='TOL')
    for name in WORKLOADS:
        parser.add_argument(f"--work-{name.replace('_', '-')}", type=int, dest=f'work_{name}', metavar='N')
    return parser


def build_config(args: argparse.Namespace) -> CommandConfig:
    """Defaults and environment, then the config file, then the flags"""
    try:
        Config.validate()
    except ValueError as e:
        raise InvalidConfigError(f"environment: {e}")
    config = CommandConfig()
    if args.config:
        try:
            with open(args.config, encoding='utf-8') as handle:
                config = CommandConfig.from_text(handle.read(), config)
        except OSError as e:
            raise InvalidConfigError(f"cannot read {args.config}: {e}")
    tolerances = {name: getattr(args, f'tol_{name}') for name in DEFAULT_TOLERANCES
                  if getattr(args, f'tol_{name}') is not None}
    workloads = {name: getattr(args, f'work_{name}') for name in WORKLOADS
                 if getattr(args, f'work_{name}') is not None}
    config = config.updated(
        command=args.command,
        p_list=args.p_list,
        grid_min=args.grid_min,
        grid_max=args.grid_max,
        grid_n=args.grid_n,
        field_n=args.field_n,
        extent=args.extent,
        seed=args.seed,
        output_path=args.output_path,
        database_url=args.database_url,
        artifact_dir=args.artifact_dir,
        tolerances=tolerances,
        workloads=workloads,
    )
    return config.validate()


def run_command(config: CommandConfig) -> Report:
    """Run one suite, or every suite for 'all'"""
    report = Report(config.command, config.to_dict())
    names = list(HANDLERS) if config.command == 'all' else [config.command]
    for name in names:
        logger.info(f"{COMMANDS[name]['emoji']} Running {name}")
        with timed(report.timings, name):
            try:
                report.extend(HANDLERS[name](config))
            except Exception as e:
                logger.error(f"Suite {name} aborted: {e}")
                report.add(CheckRecord(f'{name}_suite', name, {}, None, False, error=f"{type(e).__name__}: {e}"))
    return report


def summarize(report: Report) -> str:
    lines = []
    for record in report.records:
        if record.error is not None:
            lines.append(get_message('record_error', name=record.name, anchor=record.paper_anchor,
                                     error=record.error))
        else:
            key = 'record_pass' if record.passed else 'record_fail'
            lines.append(get_message(key, name=record.name, anchor=record.paper_anchor,
                                     values=format_values(record.values)))
    failures = report.failures()
    if failures:
        lines.append(get_message('summary_fail', failed=len(failures), total=len(report.records),
                                 names=', '.join(record.name for record in failures)))
    else:
        lines.append(get_message('summary_pass', passed=len(report.records), total=len(report.records)))
    return '\n'.join(lines)


def store_report(report: Report, config: CommandConfig) -> Optional[int]:
    from abnorm.models.database import DatabaseManager, RunHistory

    db_manager = DatabaseManager(config.database_url)
    try:
        return RunHistory(db_manager).record(report, seed=config.seed)
    finally:
        db_manager.close()


def main(argv: Optional[List[str]] = None) -> int:
    """Exit status 0 when every check passes, 1 otherwise, 2 on bad input or an unwritable report"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(level=args.log_level, to_file=args.log_to_file)
    try:
        config = build_config(args)
    except InvalidConfigError as e:
        parser.print_usage(sys.stderr)
        print(get_message('config_error', error=e), file=sys.stderr)
        return 2

    if args.print_config:
        print(get_message('config_dump', text=config.to_text()))

    logger.info(f"🚀 abnorm {config.command}, seed {config.seed}, p = {config.p_list}")
    report = run_command(config)
    print(summarize(report))
    try:
        write_text(config.output_path, report.to_json())
    except OSError as e:
        logger.error(f"Could not write the report to {config.output_path}: {e}")
        print(get_message('report_error', path=config.output_path, error=e), file=sys.stderr)
        return 2
    print(get_message('report_written', path=config.output_path))

    if config.database_url:
        try:
            run_id = store_report(report, config)
            print(get_message('run_stored', run_id=run_id))
        except Exception as e:
            logger.error(f"Could not store run history: {e}")

    logger.info("✅ Done" if report.passed else "⚠️ Done with failures")
    return 0 if report.passed else 1


if __name__ == '__main__':
    sys.exit(main())

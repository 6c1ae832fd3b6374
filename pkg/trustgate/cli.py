"""
Command Line Interface for TrustGate

Exit status: 0 success, 1 usage or input error, 2 consistency rejection.
"""

import json
import sys
from pathlib import Path
from typing import List, Optional

import click

from .ahp import (
    ConsistencyError,
    ServiceCatalog,
    analyse,
    check_names,
    classify,
    load_matrix,
    reference_catalog,
    validate_matrix,
)
from .config import (
    ConfigManager,
    TrustGateConfig,
    get_config_manager,
    set_config_manager,
    validate_config,
)
from .decision import AccessRequest, DecisionPolicy, evaluate_access
from .history import AuthEvent, AuthOutcome, HistoryLog, compute_stats, detect_anomaly
from .logging import FileLogHandler, LogLevel, get_logger
from .simulation import (
    DEFAULT_HISTORY,
    DEFAULT_SAMPLES,
    AssumedHistory,
    LowerThresholdRow,
    PenaltyRow,
    SweepRange,
    ThresholdRow,
    sweep_lower_thresholds,
    sweep_penalty,
    sweep_thresholds,
    write_csv,
)
from .trust import AuthMethod, TrustRank, TrustThresholds
from .utils import format_float, parse_number_list


EXIT_INPUT_ERROR = 1
EXIT_INCONSISTENT = 2


class TrustGateGroup(click.Group):
    """Click group whose usage errors exit with 1, leaving 2 for consistency rejection."""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = EXIT_INPUT_ERROR
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = EXIT_INPUT_ERROR
            raise


def _fail(message: str, code: int = EXIT_INPUT_ERROR, exc: Optional[BaseException] = None):
    if exc is not None:
        get_logger().exception("CLI", message, exc, {"exit_code": code})
    click.echo(f"Error: {message}", err=True)
    raise click.exceptions.Exit(code)


def _config(ctx: click.Context) -> TrustGateConfig:
    return get_config_manager().config


def _load_catalog(path: str) -> ServiceCatalog:
    try:
        return ServiceCatalog.load(path)
    except FileNotFoundError:
        _fail(f"Catalog file not found: {path}")
    except (OSError, ValueError) as e:
        _fail(f"Cannot read catalog {path}: {e}", exc=e)


def _evaluation_catalog(explicit: Optional[str], configured: str) -> ServiceCatalog:
    """An explicit --catalog must exist; the configured one falls back to the built-in catalog."""
    if explicit:
        return _load_catalog(explicit)
    if Path(configured).exists():
        return _load_catalog(configured)
    get_logger().info("CLI", f"No catalog at {configured}; using the built-in nine-level catalog")
    return reference_catalog()


def _open_history(path: Optional[str]) -> HistoryLog:
    if not path:
        return HistoryLog()
    try:
        return HistoryLog.open(path)
    except (OSError, ValueError) as e:
        _fail(f"Cannot read history {path}: {e}", exc=e)


def _thresholds(lower: float, upper: float) -> TrustThresholds:
    try:
        return TrustThresholds(lower=lower, upper=upper)
    except ValueError as e:
        _fail(str(e))


@click.group(cls=TrustGateGroup)
@click.option('--config', '-c', 'config_path', type=click.Path(), default=None,
              help='Configuration file (YAML or JSON)')
@click.option('--verbose', '-v', count=True, help='More log output (-v info, -vv debug)')
@click.pass_context
def main(ctx, config_path, verbose):
    """TrustGate - service sensitivity ranking and adaptive authentication decisions"""
    if config_path is not None and not Path(config_path).exists():
        _fail(f"Configuration file not found: {config_path}")
    try:
        manager = ConfigManager(config_path=config_path)
    except (OSError, ValueError) as e:
        _fail(f"Cannot load configuration: {e}", exc=e)
    errors = manager.validate_config()
    if errors:
        _fail("Invalid configuration: " + "; ".join(errors))
    set_config_manager(manager)

    logger = get_logger()
    level = manager.config.log_level
    if verbose == 1:
        level = "INFO"
    elif verbose > 1:
        level = "DEBUG"
    logger.set_level(LogLevel(level))
    if manager.config.log_file:
        logger.add_handler(FileLogHandler(manager.config.log_file))


@main.command()
@click.option('--path', '-p', default='trustgate.yaml', help='Where to write the configuration')
def init(path):
    """Write a default configuration file."""
    try:
        ConfigManager(config_path=path, load=False).save_config()
    except (OSError, ValueError) as e:
        _fail(f"Cannot write configuration: {e}", exc=e)
    click.echo(f"Created default configuration at {path}")


def _read_names(names_file: Optional[str]) -> Optional[List[str]]:
    if names_file is None:
        return None
    text = Path(names_file).read_text(encoding='utf-8')
    if names_file.lower().endswith('.json'):
        return [str(n) for n in json.loads(text)]
    return [line.strip() for line in text.splitlines() if line.strip()]


@main.command('classify')
@click.argument('matrix_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--names', 'names_file', type=click.Path(exists=True, dir_okay=False),
              help='Service names, one per line (or a JSON list)')
@click.option('--out', '-o', 'out_path', default=None, help='Catalog file to write')
@click.pass_context
def classify_cmd(ctx, matrix_file, names_file, out_path):
    """Rank services from a pairwise comparison matrix and write the catalog."""
    out_path = out_path or _config(ctx).paths.catalog_path
    try:
        matrix, header = load_matrix(matrix_file)
        names = _read_names(names_file) or header or [f"Service {i + 1}" for i in range(matrix.order)]
        names = check_names(names, matrix.order)
        # off-scale warnings are logged by the validator
        report = validate_matrix(matrix)
        if not report.valid:
            _fail("Invalid comparison matrix:\n  " + "\n  ".join(i.message for i in report.errors))
        analysis = analyse(matrix, report)
    except (OSError, ValueError) as e:
        _fail(str(e))

    click.echo(f"{'#':>3}  {'service':<24} {'a_i':>12} {'W_i':>12} {'A_i.W':>12}")
    for i, name in enumerate(names):
        click.echo(
            f"{i + 1:>3}  {name:<24} {format_float(analysis.means[i]):>12} "
            f"{format_float(analysis.weights.weights[i]):>12} {format_float(analysis.weighted_rows[i]):>12}"
        )
    consistency = analysis.report
    click.echo(
        f"lambda_max = {consistency.lambda_max:.7f}, CI = {consistency.ci:.7f}, "
        f"RI = {consistency.ri:.2f}, CR = {consistency.cr:.7f}"
    )

    try:
        catalog = classify(matrix, names, analysis)
    except ConsistencyError as e:
        click.echo(f"Rejected: {e}", err=True)
        raise click.exceptions.Exit(EXIT_INCONSISTENT)
    except ValueError as e:
        _fail(str(e))

    click.echo("Consistency check passed (CR < 0.1)")
    for entry in catalog:
        click.echo(f"  {entry.level}  {format_float(entry.sensitive_value)}  {entry.name}")
    try:
        catalog.save(out_path)
    except OSError as e:
        _fail(f"Cannot write catalog {out_path}: {e}")
    click.echo(f"Catalog written to {out_path}")


@main.command('evaluate')
@click.argument('level')
@click.option('--catalog', 'catalog_path', default=None, help='Catalog JSON file')
@click.option('--lower', type=float, default=None, help='Lower threshold')
@click.option('--upper', type=float, default=None, help='Upper threshold')
@click.option('--history', 'history_path', default=None, help='History JSONL file')
@click.option('--user', default='user', show_default=True, help='User whose history is used')
@click.option('--failures', type=click.IntRange(min=0), default=0, show_default=True,
              help='Failed attempts so far')
@click.option('--n-max', type=click.IntRange(min=1), default=None, help='Allowed trials')
@click.option('--json', 'as_json', is_flag=True, help='Print the decision as JSON')
@click.pass_context
def evaluate_cmd(ctx, level, catalog_path, lower, upper, history_path, user, failures, n_max, as_json):
    """Decide which credential a user must present for a service level."""
    config = _config(ctx)
    catalog = _evaluation_catalog(catalog_path, config.paths.catalog_path)
    thresholds = _thresholds(
        config.thresholds.lower if lower is None else lower,
        config.thresholds.upper if upper is None else upper,
    )
    log = _open_history(history_path if history_path is not None else config.paths.history_path)
    try:
        request = AccessRequest(
            user_id=user,
            service_level=level,
            thresholds=thresholds,
            n_max=config.penalty.n_max if n_max is None else n_max,
        )
        decision = evaluate_access(request, catalog, log, failures, DecisionPolicy.from_config(config))
    except ValueError as e:
        _fail(str(e))

    if as_json:
        click.echo(json.dumps(decision.to_dict(), indent=2))
        return

    adjusted = decision.adjusted
    click.echo(f"Service:     {decision.service.level} ({decision.service.name}), "
               f"S = {format_float(decision.service.sensitive_value)}")
    click.echo(f"Y = {format_float(decision.y)}")
    p_text = format_float(decision.penalty.p) if decision.penalty is not None else "n/a"
    click.echo(f"Y' = {format_float(decision.y_effective)} (failures {failures}, P = {p_text})")
    click.echo(f"Regions:     [0, {format_float(adjusted.lower_adj)}) "
               f"[{format_float(adjusted.lower_adj)}, {format_float(adjusted.upper_adj)}) "
               f"[{format_float(adjusted.upper_adj)}, 1]")
    click.echo(f"Decision:    {decision.rank.value}, {decision.required_method.value}")
    anomaly = decision.anomaly
    click.echo(f"Anomaly:     {'yes' if anomaly.flagged else 'no'} ({anomaly.explanation})")
    for reason in decision.reasons:
        click.echo(f"Note:        {reason}")


@main.group(cls=TrustGateGroup)
def simulate():
    """Run the threshold and penalty sweeps and write CSV tables."""
    pass


def _sweep_inputs(catalog_path: Optional[str], s_values: str):
    catalog = _load_catalog(catalog_path) if catalog_path else reference_catalog()
    try:
        samples = parse_number_list(s_values)
    except ValueError as e:
        _fail(str(e))
    if not samples:
        _fail("At least one sensitive value is needed (--s)")
    return catalog, samples


def _history_option(t1: Optional[float], t2: Optional[float]) -> Optional[AssumedHistory]:
    if t1 is None and t2 is None:
        return None
    for name, value in (("T1", t1), ("T2", t2)):
        if value is not None and not 0.0 <= value <= 1.0:
            _fail(f"{name} must lie in [0, 1], got {value}")
    return AssumedHistory(t1=t1, t2=t2)


def _emit(rows, out_path: str, row_type) -> None:
    if out_path == '-':
        write_csv(rows, sys.stdout, row_type)
        return
    try:
        with open(out_path, 'w', encoding='utf-8', newline='') as f:
            count = write_csv(rows, f, row_type)
    except OSError as e:
        _fail(f"Cannot write {out_path}: {e}")
    click.echo(f"Wrote {count} rows to {out_path}", err=True)


_default_s = ",".join(str(s) for s in DEFAULT_SAMPLES)


def sweep_options(f):
    """Options shared by the upper-threshold sweeps."""
    f = click.option('--out', '-o', 'out_path', default='-', show_default=True, help='CSV output path')(f)
    f = click.option('--step', type=float, default=0.01, show_default=True)(f)
    f = click.option('--upper-max', type=float, default=1.0, show_default=True)(f)
    f = click.option('--upper-min', type=float, default=None, help='Defaults to 0.5 + step')(f)
    f = click.option('--lower', type=float, default=0.3, show_default=True)(f)
    f = click.option('--s', 's_values', default=_default_s, show_default=True,
                     help='Comma separated sensitive values')(f)
    f = click.option('--catalog', 'catalog_path', default=None,
                     help='Catalog JSON (defaults to the built-in nine-level catalog)')(f)
    return f


@simulate.command('thresholds')
@sweep_options
@click.option('--t1', type=float, default=None, help='Assumed high-rank ratio')
@click.option('--t2', type=float, default=None, help='Assumed PIN success ratio')
def simulate_thresholds(catalog_path, s_values, lower, upper_min, upper_max, step, out_path, t1, t2):
    """Trust value and rank over a range of upper thresholds."""
    catalog, samples = _sweep_inputs(catalog_path, s_values)
    upper_range = SweepRange(0.5 + step if upper_min is None else upper_min, upper_max, step)
    try:
        rows = sweep_thresholds(catalog, samples, lower, upper_range, _history_option(t1, t2))
    except ValueError as e:
        _fail(str(e))
    _emit(rows, out_path, ThresholdRow)


@simulate.command('penalty')
@sweep_options
@click.option('--t1', type=float, default=DEFAULT_HISTORY.t1, show_default=True)
@click.option('--t2', type=float, default=DEFAULT_HISTORY.t2, show_default=True)
@click.option('--no-history', is_flag=True, help='Ignore T1/T2')
@click.option('--n-max', type=click.IntRange(min=1), default=5, show_default=True)
@click.pass_context
def simulate_penalty(ctx, catalog_path, s_values, lower, upper_min, upper_max, step, out_path,
                     t1, t2, no_history, n_max):
    """Penalised trust value and rank for 0..n_max failures."""
    catalog, samples = _sweep_inputs(catalog_path, s_values)
    upper_range = SweepRange(0.5 + step if upper_min is None else upper_min, upper_max, step)
    stats = None if no_history else _history_option(t1, t2)
    try:
        rows = sweep_penalty(catalog, samples, lower, upper_range, stats, n_max,
                             DecisionPolicy.from_config(_config(ctx)))
    except ValueError as e:
        _fail(str(e))
    _emit(rows, out_path, PenaltyRow)


@simulate.command('lower')
@click.option('--catalog', 'catalog_path', default=None)
@click.option('--s', 's_values', default=_default_s, show_default=True)
@click.option('--upper', type=float, default=0.7, show_default=True)
@click.option('--lower-min', type=float, default=0.0, show_default=True)
@click.option('--lower-max', type=float, default=0.5, show_default=True)
@click.option('--step', type=float, default=0.01, show_default=True)
@click.option('--t1', type=float, default=None)
@click.option('--t2', type=float, default=None)
@click.option('--out', '-o', 'out_path', default='-', show_default=True)
def simulate_lower(catalog_path, s_values, upper, lower_min, lower_max, step, t1, t2, out_path):
    """Trust value and rank over a range of lower thresholds."""
    catalog, samples = _sweep_inputs(catalog_path, s_values)
    try:
        rows = sweep_lower_thresholds(catalog, samples, upper,
                                      SweepRange(lower_min, lower_max, step), _history_option(t1, t2))
    except ValueError as e:
        _fail(str(e))
    _emit(rows, out_path, LowerThresholdRow)


@main.group(cls=TrustGateGroup)
@click.option('--history', 'history_path', default=None, help='History JSONL file')
@click.pass_context
def history(ctx, history_path):
    """Record authentication events and inspect history statistics."""
    ctx.meta['history_path'] = history_path or _config(ctx).paths.history_path


@history.command('add')
@click.option('--user', required=True)
@click.option('--level', required=True, help='Catalog level label')
@click.option('--rank', required=True, type=click.Choice([r.value for r in TrustRank], case_sensitive=False))
@click.option('--outcome', required=True, type=click.Choice([o.value for o in AuthOutcome], case_sensitive=False))
@click.option('--method', default=None, type=click.Choice([m.value for m in AuthMethod], case_sensitive=False),
              help="Defaults to the rank's credential")
@click.option('--ts', default=None, help='ISO-8601 timestamp (default: now)')
@click.pass_context
def history_add(ctx, user, level, rank, outcome, method, ts):
    """Append one authentication event."""
    path = ctx.meta['history_path']
    try:
        event = AuthEvent.now(user, level, TrustRank(rank.capitalize()), AuthOutcome(outcome.capitalize()))
        if method is not None or ts is not None:
            event = AuthEvent(
                timestamp=ts if ts is not None else event.timestamp,
                user_id=user,
                service_level=level,
                rank_at_attempt=event.rank_at_attempt,
                method=method if method is not None else event.method,
                outcome=event.outcome,
            )
        log = _open_history(path)
        log.record(event)
    except (OSError, ValueError) as e:
        _fail(str(e))
    click.echo(f"Recorded {event.rank_at_attempt.value}/{event.method.value}/{event.outcome.value} for {user}")


def _ratio_text(value: Optional[float]) -> str:
    return format_float(value) if value is not None else "n/a"


@history.command('stats')
@click.option('--user', required=True)
@click.option('--window', type=click.IntRange(min=1), default=None, help='Most recent events only')
@click.option('--json', 'as_json', is_flag=True)
@click.pass_context
def history_stats(ctx, user, window, as_json):
    """Print T1, T2 and T3 for a user."""
    path = ctx.meta['history_path']
    if not Path(path).exists():
        click.echo("no history")
        return
    log = _open_history(path)
    stats = compute_stats(log, user, window=window if window is not None else _config(ctx).history_window)
    if stats is None:
        click.echo("no history")
        return
    if as_json:
        click.echo(json.dumps(stats.to_dict(), indent=2))
        return
    click.echo(f"T1 = {_ratio_text(stats.t1)}  ({stats.high_events}/{stats.total_events} high-rank)")
    click.echo(f"T2 = {_ratio_text(stats.t2)}  ({stats.pin_successes}/{stats.pin_attempts} PIN successes)")
    click.echo(f"T3 = {_ratio_text(stats.t3)}  ({stats.biometric_successes}/{stats.biometric_attempts} biometric successes)")
    click.echo(f"events = {stats.total_events}")


@history.command('anomaly')
@click.option('--user', required=True)
@click.pass_context
def history_anomaly(ctx, user):
    """Check whether a good PIN record has recently turned bad."""
    path = ctx.meta['history_path']
    if not Path(path).exists():
        click.echo("no history")
        return
    report = detect_anomaly(_open_history(path), user, _config(ctx).anomaly.rule())
    click.echo(f"anomaly: {'yes' if report.flagged else 'no'}")
    click.echo(report.explanation)


@main.command('validate-config')
@click.pass_context
def validate_config_cmd(ctx):
    """Check the active configuration."""
    errors = validate_config(_config(ctx))
    if errors:
        for error in errors:
            click.echo(f"  - {error}")
        raise click.exceptions.Exit(EXIT_INPUT_ERROR)
    click.echo("Configuration is valid!")


if __name__ == '__main__':
    main()

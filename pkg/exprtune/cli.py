"""
Command-line interface.

Four verbs:

- ``tune``: run the training protocol for a configuration file
- ``eval``: re-run fixed expressions on an instance set
- ``report``: merge earlier outputs into ``summary.json``
- ``oracle``: check the solvers against known expected runtimes

``main`` maps failures to exit codes: 1 for invalid input, 2 for anything
unexpected.
"""

import json
import logging
import sys
from collections.abc import Sequence
from typing import Any

import click

from exprtune.engine import TunerConfig
from exprtune.errors import ConfigurationError, ExprTuneError
from exprtune.expr import Dialect, format_expression, parse
from exprtune.harness import (
    RUNTIME_ORACLES,
    Pool,
    baseline_expressions,
    evaluate_expressions,
    merge_reports,
    run_oracle,
    train_protocol,
    write_elite_report,
    write_evaluation,
    write_summary,
)
from exprtune.problems import (
    ProblemKind,
    evaluation_set,
    feature_names,
    instances_for_sizes,
    load_instance_set,
    training_set,
)
from exprtune.settings import Config
from exprtune.solvers import SolverKind
from utils.file import ensure_directory
from utils.logging import configure_logging, logger

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILURE = 2


def parse_override(text: str) -> tuple[str, Any]:
    """``key=value`` with the value read as a JSON scalar, else as a string."""
    key, separator, raw = text.partition("=")
    if not separator or not key.strip():
        raise ConfigurationError(f"Override must look like key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    if isinstance(value, (list, dict)):
        raise ConfigurationError(f"Override {key} must be a scalar, got {raw!r}")
    return key.strip(), value


def parse_sizes(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigurationError(f"Sizes must be comma-separated integers, got {text!r}")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default=Config.LOG_LEVEL,
    show_default=True,
)
@click.version_option(Config.VERSION, prog_name=Config.PROJECT_NAME)
def cli(log_level: str):
    """Tune parameter expressions of evolutionary algorithms."""
    configure_logging(logging.getLevelName(log_level.upper()))


@cli.command()
@click.option("--config", "config_path", required=True, help="Tuner configuration (JSON).")
@click.option("--seed", type=int, default=None, help="Override the configured seed.")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a key.")
@click.option("--output", default=Config.OUTPUT_DIR, show_default=True, help="Output directory.")
@click.option("--workers", type=int, default=Config.WORKERS, show_default=True)
@click.option("--pool", type=click.Choice([pool.value for pool in Pool]), default=Pool.TOP5.value)
@click.option("--tuner-runs", type=int, default=10, show_default=True)
def tune(config_path, seed, overrides, output, workers, pool, tuner_runs):
    """Run the tuner repeatedly and write the elite frequency report."""
    config = TunerConfig.from_json(config_path)
    changes = dict(parse_override(text) for text in overrides)
    if seed is not None:
        changes["seed"] = seed
    if changes:
        config = config.with_overrides(changes)
    output = ensure_directory(output)
    logger.info(f"Resolved configuration: {json.dumps(config.to_dict(), sort_keys=True)}")

    report = train_protocol(config, tuner_runs=tuner_runs, pool=pool, workers=workers)
    path = write_elite_report(report, output)
    logger.info(f"Elite report written to {path}")
    logger.info(f"Protocol finished after {Config.elapsed_seconds():.1f} s")
    for entry in report.top():
        click.echo(f"{entry.frequency:4d}  {entry.expression}")


@cli.command(name="eval")
@click.option("--expr", "texts", multiple=True, help="Parameter expression; repeatable.")
@click.option("--problem", type=click.Choice([kind.value for kind in ProblemKind]), required=True)
@click.option("--solver", type=click.Choice([kind.value for kind in SolverKind]), default="ea")
@click.option("--budget", required=True, help='Budget expression, e.g. "0.8*n^2".')
@click.option("--sizes", default=None, help="Comma-separated n values.")
@click.option("--instances", "instances_path", default=None, help="Instance-set file (JSON).")
@click.option("--runs", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--baselines", is_flag=True, help="Append the baseline expressions.")
@click.option("--output", default=Config.OUTPUT_DIR, show_default=True)
@click.option("--workers", type=int, default=Config.WORKERS, show_default=True)
def evaluate(
    texts, problem, solver, budget, sizes, instances_path, runs, seed, baselines, output, workers
):
    """Evaluate expressions with repeated runs and write CSV plus summary."""
    if sizes and instances_path:
        raise ConfigurationError("Give either --sizes or --instances, not both")
    if sizes:
        instances = instances_for_sizes(problem, parse_sizes(sizes))
    elif instances_path:
        instances = load_instance_set(instances_path)
    elif ProblemKind(problem) in (ProblemKind.ONEMAX, ProblemKind.LEADINGONES):
        instances = evaluation_set(problem)
    else:
        instances = training_set(problem)
    if any(instance.kind != ProblemKind(problem) for instance in instances):
        raise ConfigurationError(f"Instance set holds instances other than {problem}")

    exprs = [parse(text, Dialect.GP, feature_names(problem)) for text in texts]
    if baselines:
        exprs.extend(baseline_expressions(solver, problem))
    if not exprs:
        raise ConfigurationError("Nothing to evaluate: pass --expr or --baselines")
    output = ensure_directory(output)

    config = {
        "problem": problem,
        "solver": solver,
        "budget": budget,
        "expressions": [format_expression(expr) for expr in exprs],
        "instances": [instance.to_mapping() for instance in instances],
        "runs": runs,
        "seed": seed,
    }
    table = evaluate_expressions(
        exprs, instances, budget, solver, runs=runs, seed=seed, workers=workers
    )
    csv_path, summary_path = write_evaluation(table, config, output)
    logger.info(f"Evaluation written to {csv_path} and {summary_path}")
    for cell in table.summary(config)["cells"]:
        median = cell["normalized_fitness"]["median"]
        click.echo(f"{cell['expression']:>12}  {cell['instance']:>12}  median {median:.4f}")


@cli.command()
@click.option("--input", "inputs", multiple=True, help="Output directory or report file.")
@click.option("--output", default=Config.OUTPUT_DIR, show_default=True)
def report(inputs, output):
    """Merge earlier reports into summary.json."""
    output = ensure_directory(output)
    summary = merge_reports(inputs or (output,))
    path = write_summary(summary, output)
    click.echo(path)


@cli.command()
@click.option(
    "--check",
    "names",
    multiple=True,
    type=click.Choice(sorted(RUNTIME_ORACLES)),
    help="Oracle to run; repeatable, default all.",
)
@click.option("--runs", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def oracle(names, runs, seed):
    """Measure mean LeadingOnes runtimes against their known values."""
    names = names or sorted(RUNTIME_ORACLES)
    results = [run_oracle(name, runs=runs, seed=seed) for name in names]
    for result in results:
        click.echo(result.describe())
    if not all(result.passed for result in results):
        raise click.exceptions.Exit(EXIT_INVALID)


def main(argv: Sequence[str] | None = None) -> int:
    """Run the CLI and return its exit code."""
    args = list(argv) if argv is not None else None
    try:
        # without standalone mode click returns the code of ctx.exit() instead of exiting
        result = cli.main(args=args, prog_name=Config.PROJECT_NAME, standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return EXIT_INVALID
    except click.exceptions.Abort:
        click.echo("Aborted.", err=True)
        return EXIT_INVALID
    except ExprTuneError as e:
        logger.error(str(e))
        click.echo(f"Error: {e}", err=True)
        return EXIT_INVALID
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        click.echo(f"Error: {e}", err=True)
        return EXIT_FAILURE
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

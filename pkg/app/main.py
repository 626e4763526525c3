"""
Food price modeling toolkit - command line entry point.

    python app/main.py run --data panel.csv --out-dir out
    python app/main.py eda|select|train|evaluate|report --config run.json
    python app/main.py fixture panel.csv [--clusters 12]

Exit codes: 0 success, 2 config error, 3 data error, 4 stage failure.
"""
import logging
import os
import sys
from typing import List

sys.path.insert(0, os.path.dirname(__file__))

import click
from rich.console import Console
from rich.table import Table

from config.settings import LOG_LEVEL, VERSION, configure_logging
from models.errors import FoodPriceError
from models.evaluation import EvalReport
from services.pipeline_service import PipelineService
from services.settings_service import SettingsService
from storage import seed_data

logger = logging.getLogger(__name__)
console = Console()


def _config_options(fn):
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON config file."),
        click.option("--data", "data_path", type=click.Path(dir_okay=False), help="Indicator panel CSV."),
        click.option("--out-dir", "out_dir", type=click.Path(file_okay=False), help="Artifact directory."),
        click.option("--seed", type=int, help="Split, fold and forest seed."),
        click.option("--top-k", "top_k", type=int, help="Number of features to keep."),
        click.option("--threshold", "cluster_threshold", type=float, help="Clustering distance threshold."),
        click.option("--target", "target_column", help="Target column name."),
        click.option("--folds", type=int, help="Cross-validation folds."),
        click.option("--tune-all/--no-tune-all", "tune_all", default=None,
                     help="Grid-search the non-SVR models as well."),
        click.option("--workers", "max_workers", type=int, help="Thread pool size for CV and forests."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _load(config_path, **overrides):
    return SettingsService.load_config(config_path, overrides)


def _fail(exc: FoodPriceError) -> None:
    logger.error("%s", exc)
    sys.exit(exc.exit_code)


def print_comparison(reports: List[EvalReport]) -> None:
    table = Table(title="Model comparison (test rows)")
    for column in ("Model", "Scale", "MAE", "MSE", "RMSE", "R2", "Status"):
        table.add_column(column, justify="left" if column in ("Model", "Scale", "Status") else "right")
    for r in reports:
        if r.failed:
            table.add_row(r.model_name, r.scale.value, "-", "-", "-", "-", "[red]FAILED[/red]")
            continue
        status = "ok" if r.converged else "[yellow]not converged[/yellow]"
        table.add_row(r.model_name, r.scale.value, f"{r.mae:.6f}", f"{r.mse:.6f}",
                      f"{r.rmse:.6f}", f"{r.r2:.6f}", status)
    console.print(table)


@click.group()
@click.version_option(VERSION, prog_name="foodprice")
@click.option("--log-level", default=LOG_LEVEL, show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level):
    """Food price index modeling pipeline."""
    configure_logging(log_level)


@cli.command()
@_config_options
def run(config_path, **overrides):
    """Run eda, select, train and evaluate in one go."""
    try:
        config = _load(config_path, **overrides)
        manifest = PipelineService.run_pipeline(config)
    except FoodPriceError as exc:
        _fail(exc)
    click.echo(f"Pipeline finished: {len(manifest.outputs)} artifacts in {config.out_dir}")
    if manifest.shortfall:
        click.echo(f"Selected {config.top_k - manifest.shortfall} of {config.top_k} requested features")


def _stage_command(name: str, help_text: str):
    @_config_options
    def command(config_path, **overrides):
        try:
            config = _load(config_path, **overrides)
            result = PipelineService.run_stage(name, config)
        except FoodPriceError as exc:
            _fail(exc)
        if name == "report":
            print_comparison(result)
        click.echo(f"Stage '{name}' finished; artifacts in {config.out_dir}")

    command.__doc__ = help_text
    cli.command(name=name)(command)


_stage_command("eda", "Load, impute, split, describe and normality-screen the panel.")
_stage_command("select", "Cluster correlated features and keep the top-k representatives.")
_stage_command("train", "Fit the configured models on the selected features.")
_stage_command("evaluate", "Score the persisted models on the test rows.")
_stage_command("report", "Rebuild model_comparison.csv from persisted models and print it.")


@cli.command()
@click.argument("path", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=seed_data.DEFAULT_SEED, show_default=True)
@click.option("--features", type=int, default=seed_data.FIXTURE_FEATURES, show_default=True)
@click.option("--rows", type=int, default=seed_data.FIXTURE_ROWS, show_default=True)
@click.option("--clusters", type=int, default=None, help="Plant this many correlated feature groups.")
@click.option("--per-cluster", type=int, default=3, show_default=True)
def fixture(path, seed, features, rows, clusters, per_cluster):
    """Write a synthetic indicator panel to PATH."""
    seed_data.write_fixture(path, seed, features, rows, clusters, per_cluster)
    click.echo(f"Wrote synthetic panel to {path}")


if __name__ == "__main__":
    cli()

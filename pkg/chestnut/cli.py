import functools
import sys
from pathlib import Path
from typing import Optional

import click

from .core.config import InvocationMode, load_config
from .core.errors import ChestnutError
from .core.log import setup_logging
from .services.pipeline import run
from .services.stats import emit_stats
from .services.trace_ingest import synth_stations, synth_traces, write_gps_log, write_stations
from .services.validation import validate_output


def handle_errors(func):
    """Turn ChestnutError and OSError into a one-line message and an exit code."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ChestnutError as e:
            click.echo(f"error [{e.error_code}]: {e.message}", err=True)
            sys.exit(e.exit_code)
        except OSError as e:
            click.echo(f"I/O error: {e}", err=True)
            sys.exit(1)
    return wrapper


@click.group()
@click.option("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
@click.option("--log-file", type=click.Path(dir_okay=False), default=None, help="Also log to a rotating file")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str], log_file: Optional[str]) -> None:
    """Generate and inspect synthetic edge QoS datasets."""
    ctx.ensure_object(dict)
    ctx.obj["log_level"] = log_level
    setup_logging(log_level or "INFO", log_file)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=False, dir_okay=False), default=None,
              help="Key-value or YAML config file")
@click.option("--seed", type=int, default=None)
@click.option("--synthetic", is_flag=True, default=False,
              help="Synthesize traces and stations (required without --gps/--stations)")
@click.option("--gps", "gps_path", type=click.Path(dir_okay=False), default=None, help="GPS log CSV")
@click.option("--stations", "stations_path", type=click.Path(dir_okay=False), default=None,
              help="Base-station CSV")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory")
@click.option("--mode", type=click.Choice([m.value for m in InvocationMode]), default=None)
@click.option("--services-per-snapshot", type=int, default=None)
@click.option("--users", "n_u", type=int, default=None, help="Number of users to select")
@click.option("--force", is_flag=True, default=False, help="Replace a non-empty output directory")
@click.option("--no-progress", is_flag=True, default=False)
@click.pass_context
@handle_errors
def generate(ctx: click.Context, config_path, seed, synthetic, gps_path, stations_path, out_dir, mode,
             services_per_snapshot, n_u, force, no_progress) -> None:
    """Run the full generation pipeline."""
    if synthetic and (gps_path or stations_path):
        raise click.UsageError("--synthetic cannot be combined with --gps/--stations")
    if not synthetic and not (gps_path or stations_path):
        raise click.UsageError("pass --synthetic or both --gps and --stations")
    cfg = load_config(
        config_path,
        seed=seed,
        out_dir=out_dir,
        invocation_mode=mode,
        services_per_snapshot=services_per_snapshot,
        n_u=n_u,
        progress=False if no_progress else None,
    )
    if ctx.obj.get("log_level") is None:
        setup_logging(cfg.log_level)
    manifest = run(cfg, gps_path=gps_path, stations_path=stations_path, force=force)
    counts = ", ".join(f"{k}={v}" for k, v in sorted(manifest.counts.items()))
    click.echo(f"wrote {cfg.out_dir}: {counts}")


@cli.command()
@click.argument("out_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--rt-bin-width", type=float, default=None)
@click.option("--nj-bin-width", type=float, default=None)
@handle_errors
def stats(out_dir, rt_bin_width, nj_bin_width) -> None:
    """Recompute the statistics tables of an output directory."""
    tables = emit_stats(Path(out_dir), rt_bin_width, nj_bin_width)
    click.echo(f"wrote {len(tables)} tables to {Path(out_dir) / 'stats'}")


@cli.command()
@click.argument("out_dir", type=click.Path(exists=True, file_okay=False))
@handle_errors
def validate(out_dir) -> None:
    """Re-check every dataset invariant; exits 1 when any check fails."""
    result = validate_output(out_dir)
    for error in result.get_errors():
        click.echo(f"{error.code}: {error.message}", err=True)
    click.echo(f"{result.checks} checks, {result.violations} violations")
    if not result.is_valid():
        sys.exit(1)


@cli.command()
@click.argument("out_dir", type=click.Path(file_okay=False))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--vehicles", "n_vehicles", type=int, default=None)
@click.option("--stations", "n_stations", type=int, default=None)
@handle_errors
def synth(out_dir, config_path, seed, n_vehicles, n_stations) -> None:
    """Write synthetic gps.csv and stations.csv usable as generate inputs."""
    cfg = load_config(config_path, seed=seed, n_vehicles=n_vehicles, n_stations=n_stations)
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    write_gps_log(synth_traces(cfg, cfg.n_vehicles, cfg.seed), target / "gps.csv")
    write_stations(synth_stations(cfg, cfg.n_stations, cfg.seed), target / "stations.csv")
    click.echo(f"wrote {target / 'gps.csv'} and {target / 'stations.csv'}")


if __name__ == "__main__":
    cli()

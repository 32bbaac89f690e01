import sys
import time
from datetime import datetime, timezone

import click

from ..exceptions import DomainError, ValidationError
from ..utils.logging_config import setup_logging
from .experiment import ExperimentConfig
from .records import RecordWriter, build_summary
from .tasks import TASKS, run_task

logger = setup_logging("hieranderson")

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_VALIDATION = 2
EXIT_ERROR = 3


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_experiment(name: str, config: ExperimentConfig, progress: bool = False) -> int:
    """Run one subcommand, write its CSV and summary, and return the exit status."""
    writer = RecordWriter(config.name, config.param_hash, config.out_dir)
    started, clock = _now(), time.perf_counter()
    partial, error, result, status = False, None, None, EXIT_OK
    try:
        result = run_task(name, config, writer, progress)
    except Exception as e:
        partial, error = True, f"{type(e).__name__}: {e}"
        status = EXIT_VALIDATION if isinstance(e, (ValidationError, DomainError)) else EXIT_ERROR

    writer.flush(config.output.emit_plot_data)
    summary = build_summary(
        config_echo=config.to_dict(),
        seed=config.seed,
        param_hash=config.param_hash,
        invariants=result.invariants if result else {},
        started=started,
        finished=_now(),
        wall_time=time.perf_counter() - clock,
        partial=partial,
        details={"subcommand": name, **(result.details if result else {})},
        error=error,
    )
    writer.write_summary(summary)

    if partial:
        return status
    failed = [key for key, ok in result.invariants.items() if not ok]
    if failed:
        logger.error("%d invariant(s) failed: %s", len(failed), ", ".join(failed))
        return EXIT_INVARIANT
    logger.info("All %d invariants passed", len(result.invariants))
    return EXIT_OK


def _load(config_path, seed, replicas, out_dir, threads, dense_cap, emit_plot_data) -> ExperimentConfig:
    config = ExperimentConfig.load(config_path).with_environment()
    return config.with_overrides(
        seed=seed, replicas=replicas, out_dir=out_dir, threads=threads,
        dense_cap=dense_cap, emit_plot_data=emit_plot_data,
    )


def _experiment_command(name: str):
    @click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
    @click.option("--seed", type=int, default=None, help="Master seed (overrides the config).")
    @click.option("--replicas", type=int, default=None, help="Number of sampled potentials.")
    @click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Output directory.")
    @click.option("--threads", type=int, default=None, help="Worker threads, -1 for all cores.")
    @click.option("--dense-cap", type=int, default=None, help="Largest dimension diagonalized densely.")
    @click.option("--emit-plot-data", is_flag=True, help="Also write <experiment>.plot.csv.")
    @click.option("--progress", is_flag=True, help="Show replica progress bars.")
    def command(config_path, seed, replicas, out_dir, threads, dense_cap, emit_plot_data, progress):
        try:
            config = _load(config_path, seed, replicas, out_dir, threads, dense_cap, emit_plot_data)
        except (ValidationError, DomainError) as e:
            logger.error(f"Invalid experiment {config_path}: {e}", exc_info=True)
            click.echo(f"invalid config: {e}", err=True)
            sys.exit(EXIT_VALIDATION)
        status = run_experiment(name, config, progress)
        click.echo(f"{name}: {'ok' if status == EXIT_OK else 'FAILED'} ({config.out_dir})")
        sys.exit(status)

    command.__doc__ = TASKS[name].__doc__
    return main.command(name=name)(command)


@click.group()
def main():
    """Hierarchical Anderson model experiments."""


for _name in TASKS:
    _experiment_command(_name)


if __name__ == "__main__":
    main()

"""
CLI del optimizador (click).

Ejemplos:
    python -m app optimize --config experiment.env --out-dir results/bo
    python -m app random-search --seed 7 --set episodes_bo=15
    python -m app replay-best --runs results/bo/runs.csv --repetitions 20
    python -m app bandit-sweep --set n_executions=5
    python -m app reproduce results/bo --out-dir results/bo-again
"""

import functools
import logging
import time
from pathlib import Path
from typing import Dict, Optional, Sequence

import click
import pandas as pd

from app.core.config import dump_config, load_config, parse_overrides
from app.core.errors import RLOptError
from app.core.logging import setup_logging
from app.core.settings import settings
from app.models.experiment import Algorithm, ExperimentConfig
from app.utils import artifacts
from app.utils.harness import aggregate_curves, bandit_sweep, best_thetas_from_frame, replay_best, run_batch

logger = logging.getLogger(__name__)

COMMANDS = ("optimize", "random-search", "replay-best", "bandit-sweep")


def _handle_errors(func):
    """Traduce los errores de la aplicación a un código de salida distinto de cero."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except RLOptError as e:
            logger.debug("Detalle del error", exc_info=True)
            raise click.ClickException(str(e)) from e
    return wrapper


def _experiment_options(func):
    """Opciones comunes a los comandos que corren experimentos."""
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                     help="Archivo clave=valor con la configuración del experimento."),
        click.option("--set", "overrides", multiple=True, metavar="CLAVE=VALOR",
                     help="Sobrescribe una clave de la configuración (repetible)."),
        click.option("--seed", type=int, default=None, help="Semilla base (base_seed)."),
        click.option("--layout", type=click.Path(dir_okay=False), default=None,
                     help="Archivo de layout del gridworld."),
        click.option("--out-dir", type=click.Path(file_okay=False), default=None,
                     help="Directorio de resultados (por defecto settings.output_dir)."),
        click.option("--workers", type=int, default=None,
                     help="Procesos paralelos del batch (por defecto settings.max_workers)."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _build_config(
    config_path: Optional[str],
    overrides: Sequence[str],
    seed: Optional[int],
    layout: Optional[str],
    forced: Optional[Dict[str, str]] = None,
) -> ExperimentConfig:
    values = parse_overrides(overrides)
    if seed is not None:
        values["base_seed"] = str(seed)
    if layout is not None:
        values["layout_path"] = layout
    values.update(forced or {})
    return load_config(config_path, values)


def _out_dir(out_dir: Optional[str], command: str) -> Path:
    return Path(out_dir) if out_dir else Path(settings.output_dir) / command


def execute(
    command: str,
    config: ExperimentConfig,
    out_dir: Path,
    workers: Optional[int] = None,
    runs_path: Optional[str] = None,
    repetitions: int = 20,
) -> Path:
    """
    Corre un comando de experimento y escribe sus artefactos en `out_dir`.
    `reproduce` vuelve a entrar por aquí con lo que dice el manifest.
    """
    started = time.perf_counter()
    args: Dict[str, object] = {}
    stalled = None

    if command in ("optimize", "random-search"):
        runs = run_batch(config, workers)
        stats = aggregate_curves(runs)
        stalled = stats.stalled_meta_episodes
        artifacts.write_frame(artifacts.runs_frame(runs), out_dir, artifacts.RUNS_FILE)
        artifacts.write_frame(artifacts.curves_frame(stats), out_dir, artifacts.CURVES_FILE)
        final = stats.points[-1]
        click.echo(
            f"{config.metric.value}: óptimo final {final.mean:.4f} ± {final.ci_half_width:.4f} "
            f"({stats.n_runs} ejecuciones, {stalled} meta-episodios sin mejora)"
        )
    elif command == "bandit-sweep":
        sweep = bandit_sweep(config, max_workers=workers)
        artifacts.write_frame(sweep.table, out_dir, artifacts.SWEEP_FILE)
        artifacts.write_frame(sweep.timing, out_dir, artifacts.SWEEP_TIMING_FILE)
        click.echo(sweep.table.to_string(index=False))
    elif command == "replay-best":
        if not runs_path:
            raise click.UsageError("replay-best requiere --runs (runs.csv o su directorio)")
        source = Path(runs_path)
        if source.is_dir():
            source = source / artifacts.RUNS_FILE
        if not source.is_file():
            raise click.UsageError(f"no existe {source}")
        candidates = best_thetas_from_frame(pd.read_csv(source))
        replay = replay_best(config, candidates, repetitions)
        artifacts.write_frame(replay.curves, out_dir, artifacts.REPLAY_FILE)
        artifacts.write_frame(replay.summary, out_dir, artifacts.REPLAY_SUMMARY_FILE)
        click.echo(replay.summary.to_string(index=False))
        args.update({"runs": str(runs_path), "repetitions": repetitions})
    else:
        raise click.UsageError(f"comando desconocido: {command}")

    wall_time = time.perf_counter() - started
    if workers is not None:
        args["workers"] = workers
    artifacts.write_manifest(out_dir, command, config, args, wall_time, stalled)
    logger.info(f"✅ {command} terminado en {wall_time:.1f}s → {out_dir}")
    return out_dir


@click.group()
@click.option("--log-level", default=None, help="Nivel de logging (por defecto settings.log_level).")
def cli(log_level: Optional[str]):
    """Optimización bayesiana de hiperparámetros de SARSA(λ) con bandits de consultas."""
    setup_logging(log_level or settings.log_level)


@cli.command()
@_experiment_options
@_handle_errors
def optimize(config_path, overrides, seed, layout, out_dir, workers):
    """Batch de optimización bayesiana (GP + EI)."""
    config = _build_config(config_path, overrides, seed, layout, {"algorithm": Algorithm.BO.value})
    execute("optimize", config, _out_dir(out_dir, "optimize"), workers)


@cli.command("random-search")
@_experiment_options
@_handle_errors
def random_search(config_path, overrides, seed, layout, out_dir, workers):
    """Batch de búsqueda aleatoria con el mismo protocolo y presupuesto."""
    config = _build_config(config_path, overrides, seed, layout, {"algorithm": Algorithm.RANDOM_SEARCH.value})
    execute("random-search", config, _out_dir(out_dir, "random-search"), workers)


@cli.command("replay-best")
@_experiment_options
@click.option("--runs", "runs_path", type=click.Path(), required=True,
              help="runs.csv (o su directorio) de donde salen la mejor y segunda mejor θ.")
@click.option("--repetitions", type=int, default=20, show_default=True)
@_handle_errors
def replay_best_command(config_path, overrides, seed, layout, out_dir, workers, runs_path, repetitions):
    """Curvas de aprendizaje de la mejor θ, la segunda y la configuración por defecto de Soar."""
    config = _build_config(config_path, overrides, seed, layout)
    execute("replay-best", config, _out_dir(out_dir, "replay-best"), workers, runs_path, repetitions)


@cli.command("bandit-sweep")
@_experiment_options
@_handle_errors
def bandit_sweep_command(config_path, overrides, seed, layout, out_dir, workers):
    """Compara el número de consultas de cada política del bandit contra no usar bandit."""
    config = _build_config(config_path, overrides, seed, layout)
    execute("bandit-sweep", config, _out_dir(out_dir, "bandit-sweep"), workers)


@cli.command("validate-config")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None)
@click.option("--set", "overrides", multiple=True, metavar="CLAVE=VALOR")
@_handle_errors
def validate_config(config_path, overrides):
    """Valida la configuración e imprime los valores efectivos."""
    config = load_config(config_path, parse_overrides(overrides))
    click.echo(dump_config(config), nl=False)
    click.echo(f"# config_hash={config.config_hash()}")


@cli.command()
@click.argument("manifest", type=click.Path(exists=True))
@click.option("--out-dir", type=click.Path(file_okay=False), required=True,
              help="Directorio nuevo para los artefactos reproducidos.")
@_handle_errors
def reproduce(manifest, out_dir):
    """Vuelve a correr un experimento a partir de su manifest.txt."""
    sections = artifacts.read_manifest(manifest)
    command = sections["meta"]["command"]
    if command not in COMMANDS:
        raise click.UsageError(f"el manifest no corresponde a un comando reproducible: {command}")
    config = load_config(None, sections["config"])
    expected = sections["meta"].get("config_hash")
    if expected and expected != config.config_hash():
        logger.warning(f"⚠️ config_hash distinto: manifest={expected} actual={config.config_hash()}")
    arg = sections["arg"]
    execute(
        command,
        config,
        Path(out_dir),
        int(arg["workers"]) if "workers" in arg else None,
        arg.get("runs"),
        int(arg.get("repetitions", 20)),
    )


def main():
    cli(prog_name="rlopt")


if __name__ == "__main__":
    main()

"""
Artefactos de resultados en disco (CSV con pandas y manifest de texto).

- runs.csv: una fila por meta-episodio de cada ejecución.
- curves.csv: estadísticas agregadas de best_curve.
- manifest.txt: comando, semilla, hash de la configuración y los argumentos
  necesarios para reproducir la corrida.
"""

import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, Mapping, Sequence, Union

import pandas as pd

from app.core.errors import ConfigError
from app.models.experiment import CurveStats, ExperimentConfig, OptimizerRun

logger = logging.getLogger(__name__)

RUNS_FILE = "runs.csv"
CURVES_FILE = "curves.csv"
SWEEP_FILE = "sweep.csv"
SWEEP_TIMING_FILE = "sweep_timing.csv"
REPLAY_FILE = "replay.csv"
REPLAY_SUMMARY_FILE = "replay_summary.csv"
MANIFEST_FILE = "manifest.txt"

RUNS_COLUMNS = [
    "algorithm", "metric", "seed", "meta_episode", "phase",
    "alpha", "epsilon", "gamma", "lambda",
    "f_avg", "query_count", "query_values", "best_so_far",
]


def runs_frame(runs: Sequence[OptimizerRun]) -> pd.DataFrame:
    rows = []
    for run in runs:
        for record, best in zip(run.records, run.best_curve):
            alpha, epsilon, gamma, lambda_ = record.theta.as_vector()
            rows.append({
                "algorithm": run.algorithm.value,
                "metric": run.metric.value,
                "seed": run.seed,
                "meta_episode": record.index,
                "phase": record.phase.value,
                "alpha": alpha,
                "epsilon": epsilon,
                "gamma": gamma,
                "lambda": lambda_,
                "f_avg": record.f_avg,
                "query_count": record.query_count,
                "query_values": ";".join(repr(v) for v in record.query_values),
                "best_so_far": best,
            })
    return pd.DataFrame(rows, columns=RUNS_COLUMNS)


def curves_frame(stats: CurveStats) -> pd.DataFrame:
    frame = pd.DataFrame([point.model_dump() for point in stats.points])
    frame.insert(1, "n_runs", stats.n_runs)
    return frame


def _prepare(out_dir: Union[str, Path]) -> Path:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_frame(frame: pd.DataFrame, out_dir: Union[str, Path], name: str) -> Path:
    target = _prepare(out_dir) / name
    frame.to_csv(target, index=False)
    logger.info(f"💾 {name}: {len(frame)} filas → {target}")
    return target


def write_manifest(
    out_dir: Union[str, Path],
    command: str,
    config: ExperimentConfig,
    args: Mapping[str, object] = None,
    wall_time: float = 0.0,
    stalled_meta_episodes: int = None,
) -> Path:
    """
    Escribe manifest.txt en formato clave=valor: `config.<clave>` repite la
    configuración efectiva y `arg.<nombre>` los argumentos del comando.
    """
    lines = [
        f"command={command}",
        f"seed={config.base_seed}",
        f"config_hash={config.config_hash()}",
        f"created_at={datetime.now().isoformat()}",
        f"wall_time={wall_time:.3f}",
    ]
    if stalled_meta_episodes is not None:
        lines.append(f"stalled_meta_episodes={stalled_meta_episodes}")
    lines.extend(f"config.{key}={value}" for key, value in config.to_key_values().items())
    for name, value in (args or {}).items():
        if value is not None:
            lines.append(f"arg.{name}={value}")
    target = _prepare(out_dir) / MANIFEST_FILE
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return target


def read_manifest(path: Union[str, Path]) -> Dict[str, Dict[str, str]]:
    """
    Lee un manifest y separa sus secciones: {"meta": ..., "config": ..., "arg": ...}.
    Acepta el directorio de resultados o la ruta al archivo.
    """
    target = Path(path)
    if target.is_dir():
        target = target / MANIFEST_FILE
    if not target.is_file():
        raise ConfigError(f"no existe el manifest: {target}", ["manifest"])

    sections: Dict[str, Dict[str, str]] = {"meta": {}, "config": {}, "arg": {}}
    for line in target.read_text(encoding="utf-8").splitlines():
        if not line.strip() or "=" not in line:
            continue
        key, value = line.split("=", 1)
        prefix, _, name = key.partition(".")
        if name and prefix in ("config", "arg"):
            sections[prefix][name] = value
        else:
            sections["meta"][key] = value
    if "command" not in sections["meta"]:
        raise ConfigError(f"manifest sin comando: {target}", ["command"])
    return sections

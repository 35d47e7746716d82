#!/usr/bin/env python
"""
Lanzador de RLOpt.

    python start.py                  # API HTTP (uvicorn, puerto RLOPT_PORT)
    python start.py check            # valida todos los configs/*.env
    python start.py desk             # batch de BO a escala de escritorio (configs/desk.env)
    python start.py desk --sweep     # además, el barrido de políticas del bandit

La primera vez crea `.venv` e instala requirements.txt; después se relanza
con el intérprete del entorno virtual.
"""
import os
import subprocess
import sys

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
CONFIGS_DIR = os.path.join(BASE_DIR, "configs")


def venv_python_path() -> str:
    if sys.platform == "win32":
        return os.path.join(BASE_DIR, ".venv", "Scripts", "python.exe")
    return os.path.join(BASE_DIR, ".venv", "bin", "python")


def activate_venv():
    """Crea `.venv` con las dependencias si falta y relanza el script dentro de él."""
    venv_python = venv_python_path()
    if not os.path.exists(venv_python):
        print("⚠️  No se encontró el entorno virtual", file=sys.stderr)
        print(f"📦 Creando entorno virtual en: {os.path.join(BASE_DIR, '.venv')}")
        try:
            subprocess.run([sys.executable, "-m", "venv", ".venv"], cwd=BASE_DIR, check=True)
            print("📦 Instalando numpy, scipy, pandas, FastAPI...")
            subprocess.run([venv_python, "-m", "pip", "install", "-r", "requirements.txt"], cwd=BASE_DIR, check=True)
            print("✅ Entorno listo")
        except subprocess.CalledProcessError as e:
            print(f"❌ Error al preparar el entorno virtual: {e}", file=sys.stderr)
            sys.exit(1)

    if os.path.realpath(sys.executable) != os.path.realpath(venv_python):
        print("🔄 Reiniciando con el entorno virtual...")
        os.execv(venv_python, [venv_python] + sys.argv)


activate_venv()

import click  # noqa: E402
from dotenv import load_dotenv  # noqa: E402

# RLOPT_OUTPUT_DIR, RLOPT_MAX_WORKERS, RLOPT_PORT...
load_dotenv(os.path.join(BASE_DIR, ".env"))


def run_module(*args: str):
    """Corre `python -m <args>` con el intérprete actual; un fallo termina el lanzador."""
    try:
        subprocess.run([sys.executable, "-m", *args], cwd=BASE_DIR, check=True)
    except subprocess.CalledProcessError as e:
        print(f"❌ Falló `{' '.join(args)}` (código {e.returncode})", file=sys.stderr)
        sys.exit(e.returncode or 1)


def banner(title: str):
    print("=" * 60)
    print(f"🚀 {title}")
    print("=" * 60)
    print(f"🐍 Python: {sys.executable}")
    print(f"📁 Resultados: {os.getenv('RLOPT_OUTPUT_DIR', 'results')}")
    print(f"⚙️  Workers: {os.getenv('RLOPT_MAX_WORKERS', '1')}")
    print("=" * 60)


@click.group(invoke_without_command=True)
@click.pass_context
def launcher(ctx: click.Context):
    """Sin subcomando levanta la API."""
    if ctx.invoked_subcommand is None:
        ctx.invoke(api)


@launcher.command()
def api():
    """API HTTP en RLOPT_PORT (documentación en /docs)."""
    banner(f"RLOpt API en el puerto {os.getenv('RLOPT_PORT', '8002')}")
    run_module("app.main")


@launcher.command()
def check():
    """Valida cada archivo de configs/ con `rlopt validate-config`."""
    configs = sorted(name for name in os.listdir(CONFIGS_DIR) if name.endswith(".env"))
    for name in configs:
        print(f"🔍 {name}")
        run_module("app", "validate-config", "--config", os.path.join(CONFIGS_DIR, name))
    print(f"✅ {len(configs)} configuraciones válidas")


@launcher.command()
@click.option("--sweep", is_flag=True, help="Corre también bandit-sweep con la misma configuración.")
def desk(sweep: bool):
    """Experimento a escala de escritorio con configs/desk.env."""
    config = os.path.join(CONFIGS_DIR, "desk.env")
    banner("RLOpt: optimización bayesiana a escala de escritorio")
    run_module("app", "optimize", "--config", config)
    if sweep:
        run_module("app", "bandit-sweep", "--config", config)


if __name__ == "__main__":
    try:
        launcher(prog_name="start.py")
    except KeyboardInterrupt:
        print("\n\n⚠️  Proceso interrumpido por el usuario")
        sys.exit(0)

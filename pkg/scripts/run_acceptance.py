"""
Corridas de Aceptación
======================
Ejecuta cada configuración de data/configs y resume los códigos de salida
y los flags de PASS en una tabla.

Uso:
    python scripts/run_acceptance.py [--out results/acceptance] [--threads N]
                                     [--only energy_burgers limit_burgers]
"""

import sys
from pathlib import Path

# Agregar path del proyecto
sys.path.insert(0, str(Path(__file__).parent.parent))

import argparse
import time
from typing import Dict, List, Optional

import pandas as pd
from loguru import logger

from config import CONFIGS_DIR, RESULTS_DIR
from main import EXIT_ABORT, EXIT_FAIL, EXIT_PASS, dispatch
from modules.harness import load_report, write_csv
from modules.run_config import ConfigError, parse_config
from utils.logger import setup_logger

# Corridas que deben abortar por diseño del caso
EXPECTED_CODES = {"blowup": EXIT_ABORT}
LABELS = {EXIT_PASS: "PASS", EXIT_FAIL: "FAIL", EXIT_ABORT: "ABORT"}


def run_one(path: Path, out_root: Path, threads: Optional[int]) -> Dict:
    """Ejecutar una configuración y devolver su fila de resumen"""
    name = path.stem
    start = time.time()
    try:
        config = parse_config(path, overrides={"out": str(out_root / name), "threads": threads})
    except ConfigError as e:
        logger.error(f"{name}: configuración inválida: {e}")
        return {"config": name, "code": EXIT_ABORT, "status": "CONFIG", "expected": False,
                "seconds": 0.0, "failed_flags": ""}
    code = dispatch(config)
    report = load_report(out_root / name)
    failed = [k for k, v in report.get("pass_flags", {}).items() if v is False]
    expected = code == EXPECTED_CODES.get(name, EXIT_PASS)
    logger.info(f"{name}: {LABELS[code]} ({time.time() - start:.1f} s)")
    return {"config": name, "code": code, "status": LABELS[code], "expected": expected,
            "seconds": round(time.time() - start, 1), "failed_flags": ",".join(failed)}


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(description="Corridas de aceptación del arnés SPDE")
    parser.add_argument("--out", type=str, default=str(RESULTS_DIR / "acceptance"),
                        help="Directorio raíz de salida")
    parser.add_argument("--threads", type=int, help="Procesos del pool")
    parser.add_argument("--only", nargs="+", metavar="NAME",
                        help="Subconjunto de configuraciones (sin extensión)")
    args = parser.parse_args(argv)

    setup_logger(level="INFO")
    out_root = Path(args.out)
    paths = sorted(CONFIGS_DIR.glob("*.yaml"))
    if args.only:
        paths = [p for p in paths if p.stem in set(args.only)]
    if not paths:
        logger.error("No hay configuraciones que ejecutar")
        return EXIT_ABORT

    summary = pd.DataFrame([run_one(p, out_root, args.threads) for p in paths])
    write_csv(summary, out_root, "acceptance_summary.csv")
    print(summary.to_string(index=False))
    return EXIT_PASS if summary["expected"].all() else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

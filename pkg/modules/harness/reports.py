"""
Reportes
========
Escritura determinista de report.json (claves ordenadas, sin marcas de
tiempo, NaN/inf como null) y de tablas CSV con pandas.
"""

import json
import logging
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

REPORT_NAME = "report.json"


def sanitize(value: Any) -> Any:
    """Convertir a tipos JSON nativos; los no finitos pasan a None"""
    if isinstance(value, dict):
        return {str(k): sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return sanitize(value.tolist())
    if isinstance(value, pd.DataFrame):
        return sanitize(value.to_dict(orient="records"))
    if is_dataclass(value) and not isinstance(value, type):
        return sanitize(value.to_dict() if hasattr(value, "to_dict") else asdict(value))
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return [sanitize(value.real), sanitize(value.imag)]
    return value


def build_report(
    experiment: str,
    config_echo: Dict,
    pass_flags: Dict[str, bool],
    seeds: List[int],
    per_time_series: Optional[List[Dict]] = None,
    **extra,
) -> Dict:
    """Documento {experiment, config_echo, per_time_series, pass_flags, seeds, ...}"""
    report = {
        "experiment": experiment,
        "config_echo": config_echo,
        "per_time_series": per_time_series or [],
        "pass_flags": pass_flags,
        "seeds": list(seeds),
    }
    report.update(extra)
    return sanitize(report)


def write_report(report: Dict, out_dir: Union[str, Path]) -> Path:
    """
    Guardar report.json en ``out_dir``

    Returns:
        Ruta del archivo escrito
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / REPORT_NAME
    with open(path, "w", encoding="utf-8") as f:
        json.dump(sanitize(report), f, indent=2, sort_keys=True, ensure_ascii=False,
                  allow_nan=False)
        f.write("\n")
    logger.info(f"Reporte guardado en {path}")
    return path


def write_csv(frame: pd.DataFrame, out_dir: Union[str, Path], name: str) -> Path:
    """Guardar una tabla con precisión completa"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.debug(f"CSV guardado en {path}")
    return path


def load_report(path: Union[str, Path]) -> Dict:
    path = Path(path)
    if path.is_dir():
        path = path / REPORT_NAME
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)

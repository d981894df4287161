"""
Sistema de Logging para el Arnés SPDE
=====================================
Configuración centralizada de logging usando loguru.
Los módulos de la librería usan ``logging.getLogger(__name__)``; aquí se
redirigen esos registros hacia los sinks de loguru.
"""

import logging
import sys
from pathlib import Path
from typing import Optional, Union

from loguru import logger

from config import LogConfig


class InterceptHandler(logging.Handler):
    """Reenvía los registros de ``logging`` estándar a loguru"""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            level = logger.level(record.levelname).name
        except ValueError:
            level = record.levelno

        # Subir por la pila hasta salir del módulo logging
        frame, depth = logging.currentframe(), 2
        while frame is not None and frame.f_code.co_filename == logging.__file__:
            frame = frame.f_back
            depth += 1

        logger.opt(depth=depth, exception=record.exc_info).log(level, record.getMessage())


def setup_logger(level: str = "INFO", log_file: Optional[Union[str, Path]] = None):
    """
    Configurar el sistema de logging

    Args:
        level: Nivel de logging (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Archivo de log personalizado (opcional)

    Returns:
        logger: Instancia del logger configurado
    """
    # Remover configuración por defecto
    logger.remove()

    # Configurar output a consola si está habilitado
    if LogConfig.CONSOLE_LOG:
        logger.add(
            sys.stderr,
            format=LogConfig.LOG_FORMAT,
            level=level,
            colorize=True
        )

    # Configurar archivo de log
    log_path = log_file or LogConfig.LOG_FILE
    logger.add(
        log_path,
        format=LogConfig.LOG_FORMAT,
        level=level,
        rotation=LogConfig.LOG_ROTATION,
        retention=LogConfig.LOG_RETENTION,
        compression="zip"
    )

    # Los módulos de la librería loguean con logging estándar
    logging.basicConfig(handlers=[InterceptHandler()], level=0, force=True)

    logger.debug(f"Logger configurado - Nivel: {level}")
    logger.debug(f"Archivo de log: {log_path}")

    return logger


if __name__ == "__main__":
    setup_logger("DEBUG")
    logger.debug("Mensaje de DEBUG")
    logger.info("Mensaje de INFO")
    logging.getLogger("modules.test").warning("Mensaje de WARNING desde logging estándar")

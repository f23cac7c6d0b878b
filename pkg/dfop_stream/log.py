"""Configuración de logging para la CLI (la biblioteca nunca agrega handlers)"""

import logging
import logging.config
import os
from pathlib import Path
from typing import Optional, Union

DEFAULT_LOG_CONFIG = Path(__file__).resolve().parent.parent / "logging.ini"


def configure_logging(config_path: Optional[Union[str, Path]] = None, level: Optional[str] = None) -> None:
    """
    Carga `logging.ini` con fileConfig.

    Orden de búsqueda: argumento, DFOP_LOG_CONFIG, logging.ini en la raíz del
    repositorio; sin archivo se usa basicConfig a stderr. DFOP_LOG_LEVEL (o
    `level`) reemplaza el nivel de los loggers del paquete.
    """
    path = Path(config_path or os.environ.get("DFOP_LOG_CONFIG") or DEFAULT_LOG_CONFIG)
    if path.is_file():
        logging.config.fileConfig(path, disable_existing_loggers=False)
    else:
        logging.basicConfig(level=logging.INFO, format="%(levelname)-5.5s [%(name)s] %(message)s")

    level = level or os.environ.get("DFOP_LOG_LEVEL")
    if level:
        numeric = logging.getLevelName(level.upper())
        if not isinstance(numeric, int):
            logging.getLogger(__name__).warning("Nivel de log desconocido: %s", level)
            return
        for name in ("dfop_stream", "simulation"):
            logging.getLogger(name).setLevel(numeric)

"""
Lectura y escritura de flujos en CSV
Formato: UTF-8, encabezado, f0..f{d-1}, y, [label], [w0.., s0.., eps], [stage]
"""

import csv
import logging
import re
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from dfop_stream.errors import DataFormatError, SchemaError
from dfop_stream.estimators import Task
from simulation.data_generator import LabeledTrace

logger = logging.getLogger(__name__)

_FEATURE = re.compile(r"^f(\d+)$")
_LINE = re.compile(r"line (\d+)")


def _columns(prefix: str, d: int) -> List[str]:
    return [f"{prefix}{i}" for i in range(d)]


def write_csv(trace: LabeledTrace, path: Union[str, Path]) -> Path:
    """Escribe la traza con la verdad de terreno disponible; floats con repr exacto"""
    path = Path(path)
    d = trace.d
    data = {name: trace.X[:, i] for i, name in enumerate(_columns("f", d))}
    data["y"] = trace.y
    if trace.label is not None:
        data["label"] = np.asarray(trace.label, dtype=int)
    if trace.w is not None:
        data.update({name: trace.w[:, i] for i, name in enumerate(_columns("w", d))})
    if trace.s is not None:
        data.update({name: trace.s[:, i] for i, name in enumerate(_columns("s", d))})
    if trace.eps is not None:
        data["eps"] = trace.eps
    if trace.stage is not None:
        data["stage"] = np.asarray(trace.stage, dtype=int)

    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(data).to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    logger.info("CSV escrito: %s (%d filas, d=%d)", path, len(trace), d)
    return path


def _check_header(columns: List[str]) -> int:
    features = [c for c in columns if _FEATURE.match(c)]
    d = len(features)
    if d == 0:
        raise SchemaError("el encabezado no tiene columnas de atributos f0..")
    if features != _columns("f", d) or columns[:d] != features:
        raise SchemaError(f"los atributos deben ser f0..f{d - 1} consecutivos al inicio")
    if "y" not in columns:
        raise SchemaError("falta la columna objetivo 'y'")

    truth = [c for c in columns if c == "eps"]
    for prefix in "ws":
        group = [c for c in columns if c[0] == prefix and c[1:].isdigit()]
        if group and group != _columns(prefix, d):
            raise SchemaError(
                f"columnas de verdad incompletas o de dimensión distinta a d={d}: esperado {prefix}0..{prefix}{d - 1}"
            )
        truth += group
    if "s0" in truth and "w0" not in truth:
        raise SchemaError("las columnas s0.. requieren w0..")
    allowed = set(_columns("f", d)) | {"y", "label", "stage"} | set(truth)
    unknown = [c for c in columns if c not in allowed]
    if unknown:
        raise SchemaError(f"columnas desconocidas o de dimensión distinta a d={d}: {', '.join(unknown)}")
    return d


def _first_ragged_line(path: Path) -> Optional[int]:
    """Primera línea (1-based) con una cantidad de campos distinta al encabezado"""
    with path.open(newline="", encoding="utf-8") as handle:
        rows = csv.reader(handle)
        header = next(rows, None)
        if header is None:
            return None
        for row in rows:
            if row and len(row) != len(header):
                return rows.line_num
    return None


def _first_bad_row(df: pd.DataFrame) -> Optional[int]:
    bad = df.isna().any(axis=1)
    for name in df.columns:
        values = pd.to_numeric(df[name], errors="coerce")
        bad |= ~np.isfinite(values.to_numpy(dtype=float))
    rows = np.flatnonzero(bad.to_numpy())
    return int(rows[0]) if rows.size else None


def read_csv_stream(path: Union[str, Path], task: Optional[Task] = None) -> LabeledTrace:
    """
    Lee un CSV en el orden de las filas.

    Filas mal formadas levantan DataFormatError con la línea (1-based, el
    encabezado es la línea 1); columnas incoherentes levantan SchemaError.
    """
    path = Path(path)
    try:
        ragged = _first_ragged_line(path)
        if ragged is not None:
            raise DataFormatError("cantidad de campos distinta al encabezado", line=ragged)
        df = pd.read_csv(path, index_col=False, float_precision="round_trip", encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataFormatError(f"no existe el archivo {path}") from exc
    except pd.errors.EmptyDataError as exc:
        raise DataFormatError(f"{path} está vacío") from exc
    except pd.errors.ParserError as exc:
        match = _LINE.search(str(exc))
        line = int(match.group(1)) if match else None
        raise DataFormatError(f"fila mal formada en {path.name}", line=line) from exc
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path.name} no es UTF-8") from exc

    columns = [str(c) for c in df.columns]
    d = _check_header(columns)
    if len(df) == 0:
        raise DataFormatError(f"{path.name} no tiene filas de datos")

    bad_row = _first_bad_row(df)
    if bad_row is not None:
        raise DataFormatError("valor vacío o no numérico", line=bad_row + 2)

    X = df[_columns("f", d)].to_numpy(dtype=float)
    y = df["y"].to_numpy(dtype=float)
    if task is None:
        task = Task.CLASSIFICATION if np.isin(y, (-1.0, 1.0)).all() else Task.REGRESSION

    trace = LabeledTrace(X=X, y=y, task=task, name=path.stem)
    if "label" in df:
        trace.label = df["label"].to_numpy(dtype=int)
    if "w0" in df:
        trace.w = df[_columns("w", d)].to_numpy(dtype=float)
    if "s0" in df:
        trace.s = df[_columns("s", d)].to_numpy(dtype=float)
    if "eps" in df:
        trace.eps = df["eps"].to_numpy(dtype=float)
    if "stage" in df:
        trace.stage = df["stage"].to_numpy(dtype=int)

    logger.info("CSV leído: %s (%d filas, d=%d, %s)", path, len(trace), d, task.value)
    return trace

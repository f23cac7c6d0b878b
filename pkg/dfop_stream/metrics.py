"""
Métricas de evaluación
Exactitud acumulada, MSE, error de estimación, robustez entre algoritmos,
exactitud/MSE sobre datos de prueba frescos y la heurística del período de olvido
"""

import math
from typing import Mapping, Union

import numpy as np
import pandas as pd

from dfop_stream.errors import DegenerateInputError, MissingTruthError, ParameterError
from dfop_stream.estimators import ModelState, StreamingEstimator, WindowState

Model = Union[ModelState, WindowState, StreamingEstimator, np.ndarray]


def _same_length(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape[0] != b.shape[0]:
        raise ParameterError(f"{what}: longitudes distintas ({a.shape[0]} vs {b.shape[0]})")


def accumulated_accuracy(predictions, labels) -> np.ndarray:
    """AA(t) = Σ_{i≤t} 1[ŷ(i) = y(i)] / t"""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    _same_length(predictions, labels, "accumulated_accuracy")
    correct = np.cumsum(predictions == labels, dtype=np.int64)
    return correct / np.arange(1, correct.shape[0] + 1)


def mse(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=float)
    targets = np.asarray(targets, dtype=float)
    _same_length(predictions, targets, "mse")
    if predictions.size == 0:
        raise ParameterError("mse de una serie vacía")
    return float(np.mean((predictions - targets) ** 2))


def estimate_error_series(w_true: np.ndarray, w_hat: np.ndarray) -> np.ndarray:
    """‖w(t) − ŵ(t)‖ fila a fila; `w_true` None (flujo sin verdad) → MissingTruthError"""
    if w_true is None:
        raise MissingTruthError("el flujo no trae los pesos verdaderos w(t)")
    w_true = np.asarray(w_true, dtype=float)
    w_hat = np.asarray(w_hat, dtype=float)
    if w_true.shape != w_hat.shape:
        raise ParameterError(f"formas distintas: w {w_true.shape} vs ŵ {w_hat.shape}")
    return np.linalg.norm(w_true - w_hat, axis=1)


def final_quarter_mean(series) -> float:
    """Media del último cuarto de la serie (al menos un elemento)"""
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        return float("nan")
    start = (3 * values.size) // 4
    return float(np.mean(values[start:]))


def robustness(acc_table: Union[pd.DataFrame, Mapping[str, Mapping[str, float]]]) -> pd.Series:
    """
    r_algo = Σ_datasets acc_algo / min_α acc_α.

    `acc_table` tiene una fila por algoritmo y una columna por conjunto de datos.
    """
    table = acc_table if isinstance(acc_table, pd.DataFrame) else pd.DataFrame(acc_table).T
    table = table.astype(float)
    if table.empty or table.isna().any().any():
        raise ParameterError("la tabla de exactitudes debe estar completa")
    worst = table.min(axis=0)
    if (worst <= 0).any():
        raise DegenerateInputError(
            "exactitud mínima nula en: " + ", ".join(str(c) for c in worst.index[worst <= 0])
        )
    return table.div(worst, axis=1).sum(axis=1).rename("robustness")


def recommend_mu(T0: float) -> float:
    """μ = 1/T₀ para un período de olvido T₀ ≥ 1"""
    if not T0 >= 1:
        raise ParameterError(f"el período de olvido debe ser >= 1, recibido {T0}")
    return 1.0 / T0


def forgetting_period(mu: float) -> float:
    if not (0.0 < mu < 1.0):
        raise ParameterError(f"μ debe estar en (0, 1), recibido {mu}")
    return 1.0 / mu


# =================== DATOS DE PRUEBA FRESCOS ===================

def model_weights(model: Model) -> np.ndarray:
    if isinstance(model, np.ndarray):
        return model
    return np.asarray(model.w_hat)


def _holdout_design(model: Model, stage_concept, n_test: int, seed, add_bias: bool):
    if stage_concept is None:
        raise MissingTruthError("no hay concepto de etapa para generar datos de prueba (¿flujo CSV?)")
    if n_test < 1:
        raise ParameterError(f"n_test debe ser >= 1, recibido {n_test}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    X, y = stage_concept.sample(rng, n_test)
    if add_bias:
        X = np.hstack([X, np.ones((n_test, 1))])
    w = model_weights(model)
    if w.shape[0] != X.shape[1]:
        raise ParameterError(f"el modelo tiene d={w.shape[0]}, los datos de prueba d={X.shape[1]}")
    return X @ w, y


def holdout_accuracy(model: Model, stage_concept, n_test: int, seed, add_bias: bool = False) -> float:
    """Exactitud del modelo congelado en n_test muestras nuevas de la etapa; empate → +1"""
    raw, y = _holdout_design(model, stage_concept, n_test, seed, add_bias)
    labels = np.where(raw >= 0, 1.0, -1.0)
    return float(np.mean(labels == y))


def holdout_mse(model: Model, stage_concept, n_test: int, seed, add_bias: bool = False) -> float:
    """Pérdida cuadrática en datos de prueba generados con el concepto vigente"""
    raw, y = _holdout_design(model, stage_concept, n_test, seed, add_bias)
    return mse(raw, y)


def decay_below_e(mu: float) -> bool:
    """(1−μ)^⌈1/μ⌉ < e⁻¹"""
    return (1.0 - mu) ** math.ceil(1.0 / mu) < math.exp(-1.0)

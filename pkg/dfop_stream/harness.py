"""
Ejecución prequential de un estimador sobre un flujo
Predice antes de actualizar, actualiza, y registra ambas predicciones, la pérdida,
AA(t), el error de estimación y la evaluación con datos de prueba frescos
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from dfop_stream.errors import MissingTruthError, ParameterError
from dfop_stream.estimators import EstimatorKind, ModelState, Sample, StreamingEstimator, Task
from dfop_stream.metrics import (
    accumulated_accuracy,
    estimate_error_series,
    final_quarter_mean,
    holdout_accuracy,
    holdout_mse,
)
from simulation.data_generator import LabeledTrace

logger = logging.getLogger(__name__)


def augment(X: np.ndarray) -> np.ndarray:
    """Agrega el atributo constante 1 al final"""
    X = np.atleast_2d(X)
    return np.hstack([X, np.ones((X.shape[0], 1))])


@dataclass
class MetricSeries:
    """Registros por paso (t relativo al inicio del flujo, 1-based)"""

    t: np.ndarray
    y: np.ndarray
    pred_pre: np.ndarray
    pred_post: np.ndarray
    loss: np.ndarray
    correct_pre: np.ndarray
    correct_post: np.ndarray
    aa_pre: np.ndarray
    aa_post: np.ndarray
    est_error: Optional[np.ndarray] = None
    holdout_t: List[int] = field(default_factory=list)
    holdout_values: List[float] = field(default_factory=list)
    holdout_metric: str = "holdout_accuracy"

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            "t": self.t,
            "y": self.y,
            "pred_pre": self.pred_pre,
            "pred_post": self.pred_post,
            "loss": self.loss,
            "correct_pre": self.correct_pre.astype(int),
            "correct_post": self.correct_post.astype(int),
            "aa_pre": self.aa_pre,
            "aa_post": self.aa_post,
        })
        if self.est_error is not None:
            frame["est_error"] = self.est_error
        holdout = pd.Series(np.nan, index=frame.index)
        if self.holdout_t:
            holdout.iloc[np.asarray(self.holdout_t) - int(self.t[0])] = self.holdout_values
        frame[self.holdout_metric] = holdout
        return frame


@dataclass
class RunResult:
    series: MetricSeries
    estimator: StreamingEstimator
    task: Task
    add_bias: bool
    w_hat_history: Optional[np.ndarray] = None   # ŵ(start), …, ŵ(n)
    P_history: Optional[np.ndarray] = None       # P(start), …, P(n)

    def summary(self) -> Dict[str, Any]:
        s = self.series
        out: Dict[str, Any] = {
            "task": self.task.value,
            "estimator": self.estimator.kind.value,
            "add_bias": self.add_bias,
            "t_start": int(s.t[0]) - 1 if len(s) else self.estimator.t,
            "t_final": self.estimator.t,
            "steps": len(s),
            "frozen": self.estimator.kind is EstimatorKind.DFOP and self.estimator.state.mu == 0.0,
        }
        if len(s):
            out["accuracy_prequential"] = float(s.aa_pre[-1])
            out["accuracy_post_update"] = float(s.aa_post[-1])
            out["mean_loss"] = float(np.mean(s.loss))
            out["final_quarter_loss"] = final_quarter_mean(s.loss)
        if s.holdout_values:
            out[f"{s.holdout_metric}_mean"] = float(np.mean(s.holdout_values))
            out[f"{s.holdout_metric}_final"] = float(s.holdout_values[-1])
        if s.est_error is not None and len(s):
            out["est_error_final"] = float(s.est_error[-1])
            out["final_quarter_est_error"] = final_quarter_mean(s.est_error)
        return out


def run_stream(
    trace: LabeledTrace,
    estimator: StreamingEstimator,
    *,
    add_bias: Optional[bool] = None,
    holdout_every: int = 250,
    holdout_size: int = 1000,
    holdout_seed: int = 0,
    start: int = 0,
    record_states: bool = False,
) -> RunResult:
    """
    Recorre trace[start:] una sola vez.

    `start` es el t de un estimador reanudado desde snapshot; las métricas
    acumuladas se cuentan desde ese punto. La evaluación con datos frescos se
    hace cada `holdout_every` pasos (0 la desactiva) con la semilla
    [holdout_seed, t], así que no depende de dónde se reanude.
    """
    task = trace.task
    add_bias = task is Task.CLASSIFICATION if add_bias is None else bool(add_bias)
    n = len(trace)
    if not (0 <= start <= n):
        raise ParameterError(f"start={start} fuera del flujo de largo {n}")
    if estimator.t != start:
        raise ParameterError(f"el estimador está en t={estimator.t}, se pidió empezar en {start}")

    X = augment(trace.X) if add_bias else trace.X
    if X.shape[1] != estimator.d:
        raise ParameterError(f"el estimador tiene d={estimator.d}, el flujo d={X.shape[1]}")

    steps = n - start
    pred_pre = np.empty(steps)
    pred_post = np.empty(steps)
    w_hats = np.empty((steps + 1, estimator.d))
    w_hats[0] = estimator.w_hat
    P_history = None
    if record_states:
        if not isinstance(estimator.state, ModelState):
            raise ParameterError("record_states requiere un estimador recursivo")
        P_history = np.empty((steps + 1, estimator.d, estimator.d))
        P_history[0] = estimator.state.P

    metric_name = "holdout_accuracy" if task is Task.CLASSIFICATION else "holdout_mse"
    holdout_fn = holdout_accuracy if task is Task.CLASSIFICATION else holdout_mse
    holdout_t: List[int] = []
    holdout_values: List[float] = []
    holdout_on = holdout_every > 0

    began = time.perf_counter()
    for i in range(steps):
        index = start + i
        x = X[index]
        y = float(trace.y[index])
        pred_pre[i] = float(estimator.w_hat @ x)
        output = estimator.update(Sample(x=x, y=y, task=task))
        pred_post[i] = output.prediction_raw
        w_hats[i + 1] = output.w_hat_after
        if P_history is not None:
            P_history[i + 1] = estimator.state.P

        t = index + 1
        if holdout_on and t % holdout_every == 0:
            try:
                concept = trace.concept_at(index)
            except MissingTruthError:
                logger.warning("Flujo sin concepto por etapa: se omite la evaluación con datos frescos")
                holdout_on = False
                continue
            value = holdout_fn(estimator, concept, holdout_size, [holdout_seed, t], add_bias=add_bias)
            holdout_t.append(t)
            holdout_values.append(value)
            logger.debug("t=%d %s=%.4f", t, metric_name, value)

    elapsed = time.perf_counter() - began
    logger.info(
        "Corrida %s: %d pasos en %.2fs (%.1f µs/paso)",
        estimator.kind.value, steps, elapsed, 1e6 * elapsed / max(steps, 1),
    )

    y = trace.y[start:]
    if task is Task.CLASSIFICATION:
        label_pre = np.where(pred_pre >= 0, 1.0, -1.0)
        label_post = np.where(pred_post >= 0, 1.0, -1.0)
        correct_pre = label_pre == y
        correct_post = label_post == y
        loss = (~correct_pre).astype(float)
    else:
        # acierto de signo, empate → +1
        correct_pre = (pred_pre >= 0) == (y >= 0)
        correct_post = (pred_post >= 0) == (y >= 0)
        loss = (y - pred_pre) ** 2

    est_error = None
    if trace.w is not None and task is Task.REGRESSION and not add_bias:
        est_error = estimate_error_series(trace.w[start:], w_hats[1:])

    series = MetricSeries(
        t=np.arange(start + 1, n + 1),
        y=y,
        pred_pre=pred_pre,
        pred_post=pred_post,
        loss=loss,
        correct_pre=correct_pre,
        correct_post=correct_post,
        aa_pre=accumulated_accuracy(correct_pre, np.ones(steps, dtype=bool)),
        aa_post=accumulated_accuracy(correct_post, np.ones(steps, dtype=bool)),
        est_error=est_error,
        holdout_t=holdout_t,
        holdout_values=holdout_values,
        holdout_metric=metric_name,
    )
    return RunResult(
        series=series,
        estimator=estimator,
        task=task,
        add_bias=add_bias,
        w_hat_history=w_hats if record_states else None,
        P_history=P_history,
    )

"""
Estimadores de una sola pasada
DFOP (factor de olvido constante), G-DFOP (factor de descuento dinámico),
RLS (G-DFOP con λ≡1) y una línea base de mínimos cuadrados con ventana deslizante
"""

import hashlib
import json
import math
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from dfop_stream.errors import IntegrityError, ParameterError
from dfop_stream.linalg import outer_rank1_downdate, solve_spd

SNAPSHOT_T_WIDTH = 20


class Task(Enum):
    REGRESSION = "regression"
    CLASSIFICATION = "classification"


class EstimatorKind(Enum):
    DFOP = "dfop"
    GDFOP = "gdfop"
    RLS = "rls"
    WINDOW = "window"


class RecursionVariant(Enum):
    LEMMA = "lemma"                  # P(t) = R(t)⁻¹ exacta
    PAPER_LITERAL = "paper_literal"  # denominador 1−μ+xᵀPx tal como está impreso


# =================== TIPOS DE DOMINIO ===================

@dataclass(frozen=True)
class Sample:
    x: np.ndarray
    y: float
    task: Optional[Task] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size < 1:
            raise ParameterError(f"x debe ser un vector no vacío, forma {x.shape}")
        if not np.isfinite(x).all() or not math.isfinite(self.y):
            raise ParameterError("muestra con valores no finitos")
        if self.task is Task.CLASSIFICATION and self.y not in (-1.0, 1.0):
            raise ParameterError(f"en clasificación y debe ser ±1, recibido {self.y}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", float(self.y))


@dataclass(frozen=True)
class StepOutput:
    prediction_raw: float
    prediction_label: int
    w_hat_after: np.ndarray


@dataclass(frozen=True)
class ModelState:
    """Memoria completa de un estimador recursivo; su tamaño depende solo de d"""

    w_hat: np.ndarray
    P: np.ndarray
    t: int
    mu: float
    p0_scale: float
    kind: EstimatorKind = EstimatorKind.DFOP
    variant: RecursionVariant = RecursionVariant.LEMMA

    @property
    def d(self) -> int:
        return int(self.w_hat.shape[0])


@dataclass(frozen=True)
class WindowState:
    buffer: Tuple[Sample, ...]
    W: int
    d: int
    t: int = 0
    w_hat: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if self.w_hat is None:
            object.__setattr__(self, "w_hat", np.zeros(self.d))


def sign_label(raw: float) -> int:
    """sign con empate resuelto a +1"""
    return 1 if raw >= 0 else -1


# =================== PROGRAMAS DE λ(t) PARA G-DFOP ===================

class LambdaSchedule(ABC):
    @abstractmethod
    def __call__(self, t: int) -> float:
        """λ(t) para el paso t ≥ 1"""


@dataclass(frozen=True)
class ConstantSchedule(LambdaSchedule):
    lam: float

    def __call__(self, t: int) -> float:
        return self.lam


@dataclass(frozen=True)
class PiecewiseSchedule(LambdaSchedule):
    """Tramos (inicio, λ): λ(t) es el valor del último tramo con inicio ≤ t"""

    pieces: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        if not self.pieces:
            raise ParameterError("el programa por tramos necesita al menos un tramo")
        ordered = tuple(sorted(self.pieces))
        object.__setattr__(self, "pieces", ordered)

    def __call__(self, t: int) -> float:
        value = self.pieces[0][1]
        for start, lam in self.pieces:
            if start > t:
                break
            value = lam
        return value


@dataclass(frozen=True)
class FunctionSchedule(LambdaSchedule):
    fn: Callable[[int], float]

    def __call__(self, t: int) -> float:
        return float(self.fn(t))


def parse_lambda_schedule(text: Union[str, float]) -> LambdaSchedule:
    """'0.995' → constante; '0.99@0,0.999@25000' → por tramos"""
    if isinstance(text, (int, float)):
        return ConstantSchedule(_check_lambda(float(text)))
    text = str(text).strip()
    if "@" not in text:
        try:
            return ConstantSchedule(_check_lambda(float(text)))
        except ValueError as exc:
            raise ParameterError(f"λ inválido: {text!r}") from exc
    pieces: List[Tuple[int, float]] = []
    for chunk in text.split(","):
        try:
            value, start = chunk.split("@")
            pieces.append((int(start), _check_lambda(float(value))))
        except ValueError as exc:
            raise ParameterError(f"tramo de λ inválido: {chunk!r}") from exc
    return PiecewiseSchedule(tuple(pieces))


def _check_lambda(lam: float) -> float:
    if not (0.0 < lam <= 1.0):
        raise ParameterError(f"λ(t) debe estar en (0, 1], recibido {lam}")
    return lam


# =================== OPERACIONES FUNCIONALES ===================

def dfop_init(
    d: int,
    mu: float,
    p0_scale: float = 1e3,
    variant: RecursionVariant = RecursionVariant.LEMMA,
) -> ModelState:
    if d < 1:
        raise ParameterError(f"d debe ser >= 1, recibido {d}")
    if not (0.0 <= mu < 1.0):
        raise ParameterError(f"μ debe estar en [0, 1), recibido {mu}")
    if p0_scale <= 0:
        raise ParameterError(f"p0_scale debe ser > 0, recibido {p0_scale}")
    return ModelState(
        w_hat=np.zeros(d),
        P=p0_scale * np.eye(d),
        t=0,
        mu=float(mu),
        p0_scale=float(p0_scale),
        kind=EstimatorKind.DFOP,
        variant=variant,
    )


def gdfop_init(d: int, p0_scale: float = 1e3, kind: EstimatorKind = EstimatorKind.GDFOP) -> ModelState:
    state = dfop_init(d, 0.0, p0_scale)
    return replace(state, kind=kind)


def rls_init(d: int, p0_scale: float = 1e3) -> ModelState:
    return gdfop_init(d, p0_scale, kind=EstimatorKind.RLS)


def gdfop_from_dfop(state: ModelState) -> ModelState:
    """
    Estado G-DFOP equivalente a un estado DFOP con λ ≡ 1−μ.

    R_G = R_D/μ, por lo tanto P_G = μ·P_D; con el mismo ŵ ambas trayectorias
    coinciden paso a paso.
    """
    if state.mu <= 0:
        raise ParameterError("la reconciliación requiere μ > 0")
    return replace(state, P=state.mu * state.P, kind=EstimatorKind.GDFOP, variant=RecursionVariant.LEMMA)


def _check_dimension(state: Union[ModelState, WindowState], x: np.ndarray) -> None:
    if x.shape[0] != state.d:
        raise ParameterError(f"dimensión de la muestra {x.shape[0]} != dimensión del estado {state.d}")


def _step_output(w_hat: np.ndarray, x: np.ndarray) -> StepOutput:
    raw = float(w_hat @ x)
    return StepOutput(prediction_raw=raw, prediction_label=sign_label(raw), w_hat_after=w_hat)


def dfop_update(state: ModelState, s: Sample) -> Tuple[ModelState, StepOutput]:
    """Un paso de DFOP: P(t), L(t) = P(t)x(t), ŵ(t) y la predicción con ŵ(t)"""
    x = s.x
    _check_dimension(state, x)
    mu = state.mu
    step = state.t + 1
    if state.variant is RecursionVariant.PAPER_LITERAL:
        # (1/(1−μ))[P − μPxxᵀP/(1−μ+xᵀPx)] = inversa de (1−μ)P⁻¹ + μ/(1+xᵀPx)·xxᵀ
        beta = mu / (1.0 + float(x @ state.P @ x))
    else:
        beta = mu
    P = outer_rank1_downdate(state.P, x, 1.0 - mu, beta, step=step)
    gain = P @ x
    w_hat = state.w_hat + mu * gain * (s.y - float(state.w_hat @ x))
    new_state = replace(state, w_hat=w_hat, P=P, t=step)
    return new_state, _step_output(w_hat, x)


def gdfop_update(state: ModelState, s: Sample, lambda_t: float) -> Tuple[ModelState, StepOutput]:
    """Paso de G-DFOP con factor de descuento λ(t) ∈ (0, 1]"""
    _check_lambda(lambda_t)
    x = s.x
    _check_dimension(state, x)
    step = state.t + 1
    P = outer_rank1_downdate(state.P, x, lambda_t, 1.0, step=step)
    gain = P @ x
    w_hat = state.w_hat + gain * (s.y - float(state.w_hat @ x))
    new_state = replace(state, w_hat=w_hat, P=P, t=step)
    return new_state, _step_output(w_hat, x)


def rls_update(state: ModelState, s: Sample) -> Tuple[ModelState, StepOutput]:
    return gdfop_update(state, s, 1.0)


def window_init(d: int, W: int) -> WindowState:
    if W < 1:
        raise ParameterError(f"el tamaño de ventana debe ser >= 1, recibido {W}")
    return WindowState(buffer=(), W=int(W), d=int(d))


def window_ls_update(state: WindowState, s: Sample, ridge_eps: float = 1e-8) -> Tuple[WindowState, StepOutput]:
    """Agrega s, descarta lo más antiguo por encima de W y resuelve LS con ridge"""
    _check_dimension(state, s.x)
    buffer = deque(state.buffer, maxlen=state.W)
    buffer.append(s)
    X = np.stack([item.x for item in buffer])
    y = np.array([item.y for item in buffer])
    w_hat = _ridge_solve(X, y, ridge_eps)
    new_state = replace(state, buffer=tuple(buffer), t=state.t + 1, w_hat=w_hat)
    return new_state, _step_output(w_hat, s.x)


def _ridge_solve(X: np.ndarray, y: np.ndarray, ridge_eps: float) -> np.ndarray:
    if ridge_eps <= 0:
        # sin regularización: solución de norma mínima
        return np.linalg.lstsq(X, y, rcond=None)[0]
    A = X.T @ X + ridge_eps * np.eye(X.shape[1])
    return solve_spd(A, X.T @ y)


def predict(state: Union[ModelState, WindowState], x: np.ndarray, task: Task = Task.REGRESSION) -> Union[float, int]:
    x = np.asarray(x, dtype=float)
    _check_dimension(state, x)
    raw = float(state.w_hat @ x)
    if task is Task.CLASSIFICATION:
        return sign_label(raw)
    return raw


# =================== ESTIMADORES CON ESTADO ===================

class StreamingEstimator(ABC):
    """Contrato común de actualización en flujo"""

    kind: EstimatorKind

    @property
    @abstractmethod
    def state(self) -> Union[ModelState, WindowState]:
        ...

    @abstractmethod
    def update(self, sample: Sample) -> StepOutput:
        ...

    @property
    def w_hat(self) -> np.ndarray:
        return self.state.w_hat

    @property
    def t(self) -> int:
        return self.state.t

    @property
    def d(self) -> int:
        return self.state.d

    def predict(self, x: np.ndarray, task: Task = Task.REGRESSION) -> Union[float, int]:
        return predict(self.state, x, task)

    def snapshot(self) -> Dict[str, Any]:
        return state_to_snapshot(self.state)


class DFOPEstimator(StreamingEstimator):
    kind = EstimatorKind.DFOP

    def __init__(self, d: int, mu: float, p0_scale: float = 1e3,
                 variant: RecursionVariant = RecursionVariant.LEMMA,
                 state: Optional[ModelState] = None):
        self._state = state if state is not None else dfop_init(d, mu, p0_scale, variant)

    @property
    def state(self) -> ModelState:
        return self._state

    def update(self, sample: Sample) -> StepOutput:
        self._state, output = dfop_update(self._state, sample)
        return output


class GDFOPEstimator(StreamingEstimator):
    kind = EstimatorKind.GDFOP

    def __init__(self, d: int, schedule: LambdaSchedule, p0_scale: float = 1e3,
                 state: Optional[ModelState] = None):
        self.schedule = schedule
        self._state = state if state is not None else gdfop_init(d, p0_scale)

    @property
    def state(self) -> ModelState:
        return self._state

    def update(self, sample: Sample) -> StepOutput:
        lam = self.schedule(self._state.t + 1)
        self._state, output = gdfop_update(self._state, sample, lam)
        return output


class RLSEstimator(StreamingEstimator):
    kind = EstimatorKind.RLS

    def __init__(self, d: int, p0_scale: float = 1e3, state: Optional[ModelState] = None):
        self._state = state if state is not None else rls_init(d, p0_scale)

    @property
    def state(self) -> ModelState:
        return self._state

    def update(self, sample: Sample) -> StepOutput:
        self._state, output = rls_update(self._state, sample)
        return output


class WindowLSEstimator(StreamingEstimator):
    """Línea base con ventana deslizante; guarda hasta W muestras, no es de una pasada"""

    kind = EstimatorKind.WINDOW

    def __init__(self, d: int, window: int, ridge_eps: float = 1e-8, state: Optional[WindowState] = None):
        self.ridge_eps = ridge_eps
        self._state = state if state is not None else window_init(d, window)

    @property
    def state(self) -> WindowState:
        return self._state

    def update(self, sample: Sample) -> StepOutput:
        self._state, output = window_ls_update(self._state, sample, self.ridge_eps)
        return output

    def snapshot(self) -> Dict[str, Any]:
        return window_to_snapshot(self._state, self.ridge_eps)


def make_estimator(
    kind: Union[EstimatorKind, str],
    d: int,
    *,
    mu: float = 1e-3,
    schedule: Optional[LambdaSchedule] = None,
    window: int = 500,
    p0_scale: float = 1e3,
    ridge_eps: float = 1e-8,
    variant: RecursionVariant = RecursionVariant.LEMMA,
    snapshot: Optional[Dict[str, Any]] = None,
) -> StreamingEstimator:
    """Construye un estimador; con `snapshot` continúa desde un estado guardado"""
    kind = EstimatorKind(kind)
    state = None
    if snapshot is not None:
        state = snapshot_to_state(snapshot)
        if state.kind is not kind:
            raise ParameterError(f"el snapshot es de tipo {state.kind.value}, se pidió {kind.value}")
        if state.d != d:
            raise ParameterError(f"el snapshot tiene d={state.d}, el flujo d={d}")

    if kind is EstimatorKind.DFOP:
        return DFOPEstimator(d, mu, p0_scale, variant, state=state)
    if kind is EstimatorKind.GDFOP:
        if schedule is None:
            schedule = ConstantSchedule(1.0 - mu)
        return GDFOPEstimator(d, schedule, p0_scale, state=state)
    if kind is EstimatorKind.RLS:
        return RLSEstimator(d, p0_scale, state=state)
    if snapshot is not None:
        ridge_eps = float(_unhex(snapshot["ridge_eps"], 1)[0])
    return WindowLSEstimator(d, window, ridge_eps, state=state)


# =================== SNAPSHOTS ===================
# Orden de campos estable: d, t, mu, p0_scale, w_hat, P, kind, variant, checksum.
# Los reales van como dobles IEEE-754 little-endian en hexadecimal y t con ancho
# fijo, así el tamaño serializado depende solo de d.

def _hex(values: Union[float, np.ndarray]) -> str:
    return np.asarray(values, dtype="<f8").tobytes().hex()


def _unhex(text: str, count: Optional[int] = None) -> np.ndarray:
    try:
        values = np.frombuffer(bytes.fromhex(text), dtype="<f8").copy()
    except (TypeError, ValueError) as exc:
        raise IntegrityError(f"campo hexadecimal inválido: {exc}") from exc
    if count is not None and values.size != count:
        raise IntegrityError(f"se esperaban {count} valores, hay {values.size}")
    return values


def _checksum(payload: Dict[str, Any]) -> str:
    canonical = json.dumps(payload, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canonical.encode("ascii")).hexdigest()


def state_to_snapshot(state: Union[ModelState, WindowState]) -> Dict[str, Any]:
    if isinstance(state, WindowState):
        return window_to_snapshot(state)
    payload: Dict[str, Any] = {
        "d": state.d,
        "t": str(state.t).zfill(SNAPSHOT_T_WIDTH),
        "mu": _hex(state.mu),
        "p0_scale": _hex(state.p0_scale),
        "w_hat": _hex(state.w_hat),
        "P": _hex(state.P.reshape(-1)),
        "kind": state.kind.value,
        "variant": state.variant.value,
    }
    payload["checksum"] = _checksum(payload)
    return payload


def window_to_snapshot(state: WindowState, ridge_eps: float = 1e-8) -> Dict[str, Any]:
    X = np.array([s.x for s in state.buffer]).reshape(-1)
    y = np.array([s.y for s in state.buffer])
    payload: Dict[str, Any] = {
        "d": state.d,
        "t": str(state.t).zfill(SNAPSHOT_T_WIDTH),
        "W": state.W,
        "ridge_eps": _hex(ridge_eps),
        "X": _hex(X),
        "y": _hex(y),
        "kind": EstimatorKind.WINDOW.value,
    }
    payload["checksum"] = _checksum(payload)
    return payload


def _verify_checksum(payload: Dict[str, Any]) -> Dict[str, Any]:
    if not isinstance(payload, dict) or "checksum" not in payload:
        raise IntegrityError("snapshot sin checksum")
    body = {k: v for k, v in payload.items() if k != "checksum"}
    if _checksum(body) != payload["checksum"]:
        raise IntegrityError("checksum del snapshot no coincide (archivo corrupto)")
    return body


def snapshot_to_state(payload: Dict[str, Any]) -> Union[ModelState, WindowState]:
    body = _verify_checksum(payload)
    try:
        d = int(body["d"])
        t = int(body["t"])
        kind = EstimatorKind(body["kind"])
        if kind is EstimatorKind.WINDOW:
            X = _unhex(body["X"]).reshape(-1, d) if body["X"] else np.empty((0, d))
            y = _unhex(body["y"], X.shape[0])
            buffer = tuple(Sample(x=row, y=float(value)) for row, value in zip(X, y))
            ridge_eps = float(_unhex(body["ridge_eps"], 1)[0])
            state = WindowState(buffer=buffer, W=int(body["W"]), d=d, t=t)
            if buffer:
                state = replace(state, w_hat=_ridge_solve(X, y, ridge_eps))
            return state
        return ModelState(
            w_hat=_unhex(body["w_hat"], d),
            P=_unhex(body["P"], d * d).reshape(d, d),
            t=t,
            mu=float(_unhex(body["mu"], 1)[0]),
            p0_scale=float(_unhex(body["p0_scale"], 1)[0]),
            kind=kind,
            variant=RecursionVariant(body["variant"]),
        )
    except (KeyError, ValueError) as exc:
        raise IntegrityError(f"snapshot inválido: {exc}") from exc


def save_snapshot(state_or_payload: Union[ModelState, WindowState, Dict[str, Any]], path: Union[str, Path]) -> Path:
    payload = state_or_payload if isinstance(state_or_payload, dict) else state_to_snapshot(state_or_payload)
    path = Path(path)
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    return path


def load_snapshot(path: Union[str, Path]) -> Dict[str, Any]:
    """Lee y valida un snapshot; devuelve el registro para `make_estimator`"""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IntegrityError(f"snapshot ilegible: {exc}") from exc
    snapshot_to_state(payload)
    return payload


def run_states(
    estimator_update: Callable[[ModelState, Sample], Tuple[ModelState, StepOutput]],
    state: ModelState,
    samples: Sequence[Sample],
) -> List[ModelState]:
    """Aplica una actualización funcional y devuelve [estado(0), …, estado(n)]"""
    states = [state]
    for sample in samples:
        state, _ = estimator_update(state, sample)
        states.append(state)
    return states

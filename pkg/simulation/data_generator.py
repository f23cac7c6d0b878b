"""
Generador de flujos sintéticos con cambio de distribución
Simula SEA, hiperplano (clasificación y regresión) y el modelo lineal con deriva aditiva,
guardando la verdad de terreno w(t), s(t), ε(t) y la etapa de cada muestra
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from dfop_stream.errors import MissingTruthError, ParameterError
from dfop_stream.estimators import Sample, Task
from dfop_stream.seeds import SeedOffset, derive_rng


class StreamKind(Enum):
    SEA = "sea"
    HYPERPLANE_CLS = "hyperplane_cls"
    HYPERPLANE_REG = "hyperplane_reg"
    DRIFTING_LINEAR = "drifting_linear"
    CSV = "csv"


@dataclass(frozen=True)
class StreamDefaults:
    n: int
    dimension: Optional[int]
    n_stages: int
    task: Optional[Task]


# Configuraciones por tipo de flujo
STREAM_DEFAULTS: Dict[StreamKind, StreamDefaults] = {
    StreamKind.SEA: StreamDefaults(n=50_000, dimension=3, n_stages=4, task=Task.CLASSIFICATION),
    StreamKind.HYPERPLANE_CLS: StreamDefaults(n=90_000, dimension=10, n_stages=9, task=Task.CLASSIFICATION),
    StreamKind.HYPERPLANE_REG: StreamDefaults(n=2_000, dimension=10, n_stages=4, task=Task.REGRESSION),
    StreamKind.DRIFTING_LINEAR: StreamDefaults(n=20_000, dimension=None, n_stages=1, task=Task.REGRESSION),
    StreamKind.CSV: StreamDefaults(n=0, dimension=None, n_stages=0, task=None),
}

SEA_THRESHOLDS = (7.0, 8.0, 9.0, 9.5)
HYPERPLANE_REG_STARTS = (1, 2, 4, 7)     # concepto (x_i + x_{i+1} + x_{i+2})/3, índices 1-based
HYPERPLANE_ROTATION_STEP = math.pi / 6   # giro entre etapas consecutivas del hiperplano


@dataclass(frozen=True)
class StreamSpec:
    """Descripción declarativa de un flujo sintético o de un archivo CSV"""

    kind: StreamKind
    n: int
    seed: int = 0
    noise_rate: float = 0.0
    d: int = 5
    gamma: float = 1e-3
    sigma: float = 0.1
    w0: Optional[Tuple[float, ...]] = None
    csv_path: Optional[str] = None

    def __post_init__(self):
        if self.kind is not StreamKind.CSV and self.n < 1:
            raise ParameterError(f"n debe ser >= 1, recibido {self.n}")
        if not (0.0 <= self.noise_rate < 0.5):
            raise ParameterError(f"noise_rate debe estar en [0, 0.5), recibido {self.noise_rate}")
        if self.gamma < 0 or self.sigma < 0:
            raise ParameterError("gamma y sigma deben ser >= 0")
        if self.d < 1:
            raise ParameterError(f"d debe ser >= 1, recibido {self.d}")
        if self.kind is StreamKind.CSV and not self.csv_path:
            raise ParameterError("un flujo csv necesita csv_path")

    @property
    def task(self) -> Optional[Task]:
        return STREAM_DEFAULTS[self.kind].task


# =================== CONCEPTOS POR ETAPA ===================

@dataclass(frozen=True)
class SeaConcept:
    """+1 si x1 + x2 ≤ b; atributos uniformes en [0, 10]³"""

    b: float
    noise_rate: float = 0.0
    dimension: int = 3
    task: Task = Task.CLASSIFICATION

    def value(self, X: np.ndarray) -> np.ndarray:
        return self.b - (X[:, 0] + X[:, 1])

    def label(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.value(X) >= 0, 1, -1)

    def sample(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        X = rng.uniform(0.0, 10.0, size=(n, self.dimension))
        y = self.label(X)
        flips = rng.random(n) < self.noise_rate
        return X, np.where(flips, -y, y).astype(float)


@dataclass(frozen=True)
class HyperplaneConcept:
    """+1 si wᵀ(x − 0.5) ≥ 0; x uniforme en [0, 1]^d"""

    w: Tuple[float, ...]
    task: Task = Task.CLASSIFICATION

    @property
    def dimension(self) -> int:
        return len(self.w)

    def value(self, X: np.ndarray) -> np.ndarray:
        return (X - 0.5) @ np.asarray(self.w)

    def label(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.value(X) >= 0, 1, -1)

    def sample(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        X = rng.uniform(0.0, 1.0, size=(n, self.dimension))
        return X, self.label(X).astype(float)


@dataclass(frozen=True)
class WindowMeanConcept:
    """Valor (x_i + x_{i+1} + x_{i+2})/3 con i 1-based; etiqueta +1 si ≥ 0.5"""

    start: int
    dimension: int = 10
    task: Task = Task.REGRESSION

    @property
    def weights(self) -> np.ndarray:
        w = np.zeros(self.dimension)
        w[self.start - 1:self.start + 2] = 1.0 / 3.0
        return w

    def value(self, X: np.ndarray) -> np.ndarray:
        return X[:, self.start - 1:self.start + 2].sum(axis=1) / 3.0

    def label(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.value(X) >= 0.5, 1, -1)

    def sample(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        X = rng.uniform(0.0, 1.0, size=(n, self.dimension))
        return X, self.value(X)


@dataclass(frozen=True)
class LinearConcept:
    """y = wᵀx + ε, x uniforme en [−1, 1]^d, ε ~ N(0, σ²)"""

    w: Tuple[float, ...]
    sigma: float = 0.0
    task: Task = Task.REGRESSION

    @property
    def dimension(self) -> int:
        return len(self.w)

    def value(self, X: np.ndarray) -> np.ndarray:
        return X @ np.asarray(self.w)

    def label(self, X: np.ndarray) -> np.ndarray:
        return np.where(self.value(X) >= 0, 1, -1)

    def sample(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        X = rng.uniform(-1.0, 1.0, size=(n, self.dimension))
        return X, self.value(X) + self.sigma * rng.standard_normal(n)


# =================== TRAZA ETIQUETADA ===================

@dataclass
class LabeledTrace:
    """
    Muestras ordenadas más la verdad de terreno opcional.

    w[t-1] = w(t) es el concepto que genera la muestra t+1, así que
    y(t) = x(t)ᵀw(t−1) + ε(t) y w(t) = w(t−1) + s(t).
    """

    X: np.ndarray
    y: np.ndarray
    task: Task
    label: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    eps: Optional[np.ndarray] = None
    stage: Optional[np.ndarray] = None
    concepts: Optional[Tuple] = field(default=None, compare=False)
    name: str = ""

    def __len__(self) -> int:
        return int(self.y.shape[0])

    @property
    def d(self) -> int:
        return int(self.X.shape[1])

    @property
    def has_truth(self) -> bool:
        return self.w is not None and self.s is not None and self.eps is not None

    @property
    def w_path(self) -> np.ndarray:
        """w(0), …, w(n)"""
        if self.w is None or self.s is None:
            raise MissingTruthError(f"el flujo {self.name or 'csv'} no trae w(t)/s(t)")
        return np.vstack([self.w[0] - self.s[0], self.w])

    def samples(self, start: int = 0) -> Iterator[Sample]:
        for i in range(start, len(self)):
            yield Sample(x=self.X[i], y=float(self.y[i]), task=self.task)

    def concept_at(self, index: int):
        """Concepto que generó la muestra `index` (0-based)"""
        if self.concepts is not None and self.stage is not None:
            return self.concepts[int(self.stage[index])]
        if self.w is not None and self.s is not None and self.task is Task.REGRESSION:
            sigma = float(np.std(self.eps)) if self.eps is not None else 0.0
            return LinearConcept(w=tuple(self.w_path[index]), sigma=sigma)
        raise MissingTruthError("el flujo no trae el concepto de cada etapa (¿CSV externo?)")


def stage_ids(n: int, n_stages: int) -> np.ndarray:
    """Etapas de igual longitud; los límites caen en múltiplos de n/n_stages"""
    return np.minimum(np.arange(n) * n_stages // n, n_stages - 1)


def _staged_truth(weights: np.ndarray, stage: np.ndarray):
    """w(t) = concepto de la muestra t+1; s(t) son los saltos entre etapas"""
    per_step = weights[stage]                         # concepto que genera cada muestra
    w = np.vstack([per_step[1:], per_step[-1:]])       # w(t) para t = 1..n
    w_prev = per_step                                  # w(t−1)
    return w, w - w_prev


# =================== GENERADORES ===================

def gen_sea(n: int = 50_000, noise_rate: float = 0.0, seed: int = 0) -> LabeledTrace:
    """SEA: 3 atributos en [0, 10], 4 etapas con b ∈ {7, 8, 9, 9.5}"""
    if not (0.0 <= noise_rate < 0.5):
        raise ParameterError(f"noise_rate debe estar en [0, 0.5), recibido {noise_rate}")
    rng = np.random.default_rng(seed)
    concepts = tuple(SeaConcept(b=b, noise_rate=noise_rate) for b in SEA_THRESHOLDS)
    stage = stage_ids(n, len(concepts))

    X = rng.uniform(0.0, 10.0, size=(n, 3))
    clean = np.empty(n, dtype=int)
    for k, concept in enumerate(concepts):
        mask = stage == k
        clean[mask] = concept.label(X[mask])
    flips = rng.random(n) < noise_rate
    y = np.where(flips, -clean, clean)

    return LabeledTrace(
        X=X, y=y.astype(float), task=Task.CLASSIFICATION, label=y.astype(int),
        stage=stage, concepts=concepts, name=StreamKind.SEA.value,
    )


def hyperplane_weights(seed: int, n_stages: int = 9, d: int = 10) -> np.ndarray:
    """
    Vectores normales por etapa: w_0 = (1, …, 1)/√d girado k·π/6 en el plano
    que forma con una dirección ortogonal elegida con la semilla.
    """
    rng = derive_rng(seed, SeedOffset.CONCEPT)
    w0 = np.ones(d) / math.sqrt(d)
    u = rng.standard_normal(d)
    u -= (u @ w0) * w0
    u /= np.linalg.norm(u)
    angles = HYPERPLANE_ROTATION_STEP * np.arange(n_stages)
    return np.cos(angles)[:, None] * w0 + np.sin(angles)[:, None] * u


def gen_hyperplane_cls(n: int = 90_000, seed: int = 0, n_stages: int = 9, d: int = 10) -> LabeledTrace:
    """Hiperplano de clasificación en 10 dimensiones con 9 etapas"""
    rng = np.random.default_rng(seed)
    weights = hyperplane_weights(seed, n_stages, d)
    concepts = tuple(HyperplaneConcept(w=tuple(w)) for w in weights)
    stage = stage_ids(n, n_stages)

    X = rng.uniform(0.0, 1.0, size=(n, d))
    y = np.where(np.einsum("ij,ij->i", X - 0.5, weights[stage]) >= 0, 1, -1)
    w, _ = _staged_truth(weights, stage)

    return LabeledTrace(
        X=X, y=y.astype(float), task=Task.CLASSIFICATION, label=y, w=w,
        stage=stage, concepts=concepts, name=StreamKind.HYPERPLANE_CLS.value,
    )


def gen_hyperplane_reg(n: int = 2_000, seed: int = 0) -> LabeledTrace:
    """Hiperplano de regresión: 10 variables en [0, 1], 4 etapas, i = 1, 2, 4, 7"""
    rng = np.random.default_rng(seed)
    concepts = tuple(WindowMeanConcept(start=i) for i in HYPERPLANE_REG_STARTS)
    weights = np.stack([c.weights for c in concepts])
    stage = stage_ids(n, len(concepts))

    X = rng.uniform(0.0, 1.0, size=(n, 10))
    w_prev = weights[stage]
    y = np.einsum("ij,ij->i", X, w_prev)
    w, s = _staged_truth(weights, stage)

    return LabeledTrace(
        X=X, y=y, task=Task.REGRESSION, label=np.where(y >= 0.5, 1, -1),
        w=w, s=s, eps=np.zeros(n), stage=stage, concepts=concepts,
        name=StreamKind.HYPERPLANE_REG.value,
    )


def gen_drifting_linear(
    d: int = 5,
    n: int = 20_000,
    gamma: float = 1e-3,
    sigma: float = 0.1,
    seed: int = 0,
    w0: Optional[np.ndarray] = None,
) -> LabeledTrace:
    """
    y(t) = x(t)ᵀw(t−1) + ε(t), w(t) = w(t−1) + s(t)
    s(t) ~ N(0, γ²I), ε(t) ~ N(0, σ²), x(t) uniforme en [−1, 1]^d
    """
    if gamma < 0 or sigma < 0:
        raise ParameterError("gamma y sigma deben ser >= 0")
    w0 = np.ones(d) / math.sqrt(d) if w0 is None else np.asarray(w0, dtype=float)
    if w0.shape != (d,):
        raise ParameterError(f"w0 debe tener dimensión {d}")
    rng = np.random.default_rng(seed)

    X = rng.uniform(-1.0, 1.0, size=(n, d))
    eps = sigma * rng.standard_normal(n)
    s = gamma * rng.standard_normal((n, d))
    w_path = np.cumsum(np.vstack([w0, s]), axis=0)    # suma secuencial: w(t) = w(t−1) + s(t)
    y = np.einsum("ij,ij->i", X, w_path[:-1]) + eps

    return LabeledTrace(
        X=X, y=y, task=Task.REGRESSION, w=w_path[1:], s=s, eps=eps,
        name=StreamKind.DRIFTING_LINEAR.value,
    )


def generate_trace(spec: StreamSpec) -> LabeledTrace:
    """Traza completa para un StreamSpec; función pura de (spec, semilla)"""
    if spec.kind is StreamKind.SEA:
        return gen_sea(spec.n, spec.noise_rate, spec.seed)
    if spec.kind is StreamKind.HYPERPLANE_CLS:
        return gen_hyperplane_cls(spec.n, spec.seed)
    if spec.kind is StreamKind.HYPERPLANE_REG:
        return gen_hyperplane_reg(spec.n, spec.seed)
    if spec.kind is StreamKind.DRIFTING_LINEAR:
        w0 = None if spec.w0 is None else np.asarray(spec.w0)
        return gen_drifting_linear(spec.d, spec.n, spec.gamma, spec.sigma, spec.seed, w0)

    from simulation.csv_io import read_csv_stream
    return read_csv_stream(spec.csv_path)


# Función de prueba
if __name__ == "__main__":
    print("🧪 Probando generador de flujos...")

    trace = gen_sea(n=8, seed=1)
    for x, y, stage in zip(trace.X, trace.y, trace.stage):
        print(f"  etapa {stage}: x=({x[0]:.2f}, {x[1]:.2f}, {x[2]:.2f}) → {int(y):+d}")

    drift = gen_drifting_linear(d=3, n=5, seed=1)
    for t, (w, y) in enumerate(zip(drift.w, drift.y), start=1):
        print(f"  t={t}: y={y:+.3f} w(t)={np.round(w, 4)}")

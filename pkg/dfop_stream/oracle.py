"""
Referencias exactas (no recursivas)
- Solución cerrada de mínimos cuadrados con descuento, regularizada por la inicialización
- Evaluación de la cota de error de estimación y su descomposición en tres partes
- Verificación de la recurrencia lineal de R(t)·w̃(t) sobre una corrida sintética
"""

import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from dfop_stream.errors import MissingTruthError, ParameterError
from dfop_stream.estimators import Sample
from dfop_stream.linalg import solve_spd, spectral_norm


@dataclass(frozen=True)
class History:
    """Muestras ordenadas con sus factores de descuento λ(1..t)"""

    X: np.ndarray          # (t, d)
    y: np.ndarray          # (t,)
    lambdas: np.ndarray    # (t,), λ(i) ∈ (0, 1]

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0] or self.y.shape[0] != self.lambdas.shape[0]:
            raise ParameterError("History con longitudes distintas")
        if np.any(self.lambdas <= 0) or np.any(self.lambdas > 1):
            raise ParameterError("todos los λ(i) deben estar en (0, 1]")

    @classmethod
    def from_samples(cls, samples: Sequence[Sample], lambdas, d: Optional[int] = None) -> "History":
        if samples:
            X = np.stack([s.x for s in samples])
        else:
            X = np.empty((0, d or 0))
        y = np.array([s.y for s in samples], dtype=float)
        lam = np.broadcast_to(np.asarray(lambdas, dtype=float), y.shape).copy()
        return cls(X=X, y=y, lambdas=lam)

    @property
    def t(self) -> int:
        return int(self.y.shape[0])


def discount_weights(lambdas: np.ndarray):
    """
    Devuelve (Λ(0,t), [Λ(1,t), …, Λ(t,t)]) con Λ(i,t) = ∏_{j=i+1}^t λ(j).
    """
    if lambdas.size == 0:
        return 1.0, np.empty(0)
    suffix = np.cumprod(lambdas[::-1])[::-1]   # suffix[k] = λ(k+1)·…·λ(t)
    return float(suffix[0]), np.append(suffix[1:], 1.0)


def closed_form_weighted_ls(h: History, R0: np.ndarray, w0: np.ndarray) -> np.ndarray:
    """
    ŵ(t) = [Σ Λ(i,t) x xᵀ + Λ(0,t)·R0]⁻¹ [Σ Λ(i,t) x y + Λ(0,t)·R0·w0]

    Con R0 → 0 es la solución cerrada sin inicialización; con R0 = 0 y datos
    que no generan el espacio levanta SingularMatrixError.
    """
    w0 = np.asarray(w0, dtype=float)
    if h.t == 0:
        return w0.copy()
    lam0, weights = discount_weights(h.lambdas)
    A = lam0 * R0 + (h.X * weights[:, None]).T @ h.X
    b = lam0 * (R0 @ w0) + h.X.T @ (weights * h.y)
    return solve_spd(0.5 * (A + A.T), b)


def dfop_oracle_prior(d: int, mu: float, p0_scale: float):
    """(R0, λ) del problema cerrado equivalente a DFOP con P(0) = p0_scale·I"""
    if mu <= 0:
        raise ParameterError("la equivalencia con la forma cerrada requiere μ > 0")
    return np.eye(d) / (p0_scale * mu), 1.0 - mu


# =================== COTA DE ERROR ===================

@dataclass(frozen=True)
class BoundParams:
    K: float              # sup ‖P(k)‖
    x_star: float         # sup ‖x(k)‖
    sigma_star: float     # sup ‖x(k)‖ · sup σ_k
    gamma_star: float     # sup γ_k
    R0_norm: float
    w_tilde0_norm: float
    mu: float
    t: int
    delta: float

    def validate(self) -> None:
        for name in ("K", "x_star", "sigma_star", "gamma_star", "R0_norm", "w_tilde0_norm"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} debe ser >= 0")
        if not (0.0 < self.mu < 1.0):
            raise ParameterError(f"μ debe estar en (0, 1) para evaluar la cota, recibido {self.mu}")
        if not (0.0 < self.delta < 1.0):
            raise ParameterError(f"δ debe estar en (0, 1), recibido {self.delta}")
        if self.t < 1:
            raise ParameterError(f"t debe ser >= 1, recibido {self.t}")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class BoundTerms:
    """Las tres partes de la cota, cada una ya multiplicada por K"""

    initialization: float
    noise: float
    drift: float

    @property
    def total(self) -> float:
        return self.initialization + self.noise + self.drift

    def to_dict(self) -> Dict[str, float]:
        return {**asdict(self), "total": self.total}


def confidence_factor(t: int, delta: float) -> float:
    """√2·(1 + √(3·ln(2t/δ)))"""
    return math.sqrt(2.0) * (1.0 + math.sqrt(3.0 * math.log(2.0 * t / delta)))


def theorem2_terms(p: BoundParams) -> BoundTerms:
    p.validate()
    c = confidence_factor(p.t, p.delta)
    root_mu = math.sqrt(p.mu)
    return BoundTerms(
        initialization=p.K * math.pow(1.0 - p.mu, p.t) * p.R0_norm * p.w_tilde0_norm,
        noise=p.K * c * 2.0 * p.sigma_star * root_mu,
        drift=p.K * c * p.gamma_star * (p.R0_norm + p.x_star ** 2) / root_mu,
    )


def theorem2_bound(p: BoundParams) -> float:
    return theorem2_terms(p).total


def gaussian_bounding_scale(d: int) -> float:
    """
    c_d tal que un vector gaussiano con varianza g² por coordenada cumple
    E exp(‖s‖²/(c_d·g)²) ≤ e; (1 − 2/c_d²)^(−d/2) = e.
    """
    if d < 1:
        raise ParameterError("d debe ser >= 1")
    return math.sqrt(2.0 / (1.0 - math.exp(-2.0 / d)))


def realized_bound_params(
    X: np.ndarray,
    P_history: np.ndarray,
    *,
    mu: float,
    delta: float,
    gamma: float,
    sigma: float,
    R0_norm: float,
    w_tilde0_norm: float,
) -> BoundParams:
    """BoundParams con los supremos realizados en la corrida (k = 1..t)"""
    t, d = X.shape
    K = max(spectral_norm(P) for P in P_history[1:])
    x_star = float(np.max(np.linalg.norm(X, axis=1)))
    return BoundParams(
        K=K,
        x_star=x_star,
        sigma_star=x_star * gaussian_bounding_scale(1) * sigma,
        gamma_star=gaussian_bounding_scale(d) * gamma,
        R0_norm=R0_norm,
        w_tilde0_norm=w_tilde0_norm,
        mu=mu,
        t=t,
        delta=delta,
    )


# =================== RECURRENCIA DE R(t)·w̃(t) ===================

@dataclass(frozen=True)
class RunTrace:
    """
    Corrida DFOP con verdad de terreno.

    w_hat y P incluyen el estado inicial (n+1 filas); w_true, s y eps son los
    del generador (n filas, w_true[t-1] = w(t)).
    """

    X: np.ndarray
    w_hat: np.ndarray
    P: np.ndarray
    mu: float
    w_true: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    eps: Optional[np.ndarray] = None

    @property
    def has_truth(self) -> bool:
        return self.w_true is not None and self.s is not None and self.eps is not None


def wtilde_recurrence_check(run: RunTrace) -> float:
    """
    max_t ‖R(t)e(t) − (1−μ)R(t−1)e(t−1) − μ x(t)ε(t) + R(t)s(t)‖ con e = ŵ − w.

    Con e = ŵ − w la identidad coincide término a término con la recurrencia de
    la demostración; su norma es la del error de estimación ‖w − ŵ‖.
    """
    if not run.has_truth:
        raise MissingTruthError("la corrida no trae w(t), s(t) y ε(t) del generador")
    n = run.X.shape[0]
    if n == 0:
        return 0.0
    w_init = run.w_true[0] - run.s[0]
    w_path = np.vstack([w_init, run.w_true])          # w(0), …, w(n)
    e = run.w_hat - w_path
    previous = np.linalg.solve(run.P[0], e[0])
    worst = 0.0
    for t in range(1, n + 1):
        x = run.X[t - 1]
        current = np.linalg.solve(run.P[t], e[t])
        drift_term = np.linalg.solve(run.P[t], run.s[t - 1])
        expected = (1.0 - run.mu) * previous + run.mu * x * run.eps[t - 1] - drift_term
        worst = max(worst, float(np.linalg.norm(current - expected)))
        previous = current
    return worst

"""
Álgebra lineal densa para dimensión pequeña d
Actualizaciones de rango 1 (Sherman-Morrison), resolución SPD y norma espectral
"""

from typing import Optional

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

from dfop_stream.errors import NumericFailureError, ParameterError, SingularMatrixError


def symmetrize(A: np.ndarray) -> np.ndarray:
    """(A + Aᵀ)/2; el resultado es simétrico bit a bit"""
    return 0.5 * (A + A.T)


def outer_rank1_downdate(
    P: np.ndarray,
    x: np.ndarray,
    alpha: float,
    beta: float,
    step: Optional[int] = None,
) -> np.ndarray:
    """
    Inversa exacta de (alpha·P⁻¹ + beta·x xᵀ) a partir de P.

    Equivale a (1/alpha)·[P − beta·P x xᵀ P / (alpha + beta·xᵀPx)], evaluado en
    forma de Joseph, (I − k xᵀ) P (I − k xᵀ)ᵀ + r k kᵀ con r = alpha/beta, que
    conserva la semidefinición positiva con ‖x‖ grandes.
    """
    if alpha <= 0:
        raise ParameterError(f"alpha debe ser > 0, recibido {alpha}")
    if beta < 0:
        raise ParameterError(f"beta debe ser >= 0, recibido {beta}")

    if beta == 0.0:
        updated = P / alpha
    else:
        r = alpha / beta
        Px = P @ x
        k = Px / (float(x @ Px) + r)
        A = np.eye(P.shape[0]) - np.outer(k, x)
        updated = (A @ P @ A.T + r * np.outer(k, k)) / alpha

    if not np.isfinite(updated).all():
        raise NumericFailureError("actualización de rango 1 no finita (overflow)", step=step)
    return symmetrize(updated)


def solve_spd(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Resuelve A x = b con Cholesky (LAPACK dpotrf); A simétrica definida positiva"""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    factor, info = dpotrf(A, lower=False, clean=True)
    if info > 0:
        # dpotrf reporta el orden (1-based) del menor principal que falla
        raise SingularMatrixError("matriz no definida positiva", pivot=int(info) - 1)
    if info < 0:
        raise ParameterError(f"argumento inválido para dpotrf ({info})")
    return cho_solve((factor, False), b)


def spectral_norm(A: np.ndarray) -> float:
    """Mayor autovalor en valor absoluto de una matriz simétrica"""
    eigenvalues = np.linalg.eigvalsh(A)
    return float(np.max(np.abs(eigenvalues)))


def min_eigenvalue(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(A)[0])

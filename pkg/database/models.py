"""
Modelos de base de datos para los resultados de barridos de μ
Una fila por celda (μ, semilla); las celdas fallidas quedan marcadas, no se omiten
"""

from sqlalchemy import Column, DateTime, Float, Integer, String, Text
from sqlalchemy.orm import declarative_base
from sqlalchemy.sql import func

Base = declarative_base()


class SweepCellRecord(Base):
    """
    Tabla de celdas de barrido
    Métricas de resumen de una corrida con un μ y una semilla
    """
    __tablename__ = "sweep_cells"

    id = Column(Integer, primary_key=True, index=True)
    created_at = Column(DateTime, default=func.now())

    # Identificación de la celda
    sweep_id = Column(String(64), index=True)
    stream = Column(String(20))  # 'sea', 'hyperplane_cls', 'hyperplane_reg', 'drifting_linear', 'csv'
    estimator = Column(String(10))  # 'dfop', 'gdfop', 'rls', 'window'
    mu = Column(Float, index=True)
    seed = Column(Integer, index=True)

    # Resultado
    status = Column(String(10), default='ok')  # 'ok', 'failed'
    error_message = Column(Text, nullable=True)

    # Métricas (nulas si no aplican a la tarea o la celda falló)
    accuracy = Column(Float, nullable=True)  # AA(n) prequential
    holdout_mean = Column(Float, nullable=True)
    mean_loss = Column(Float, nullable=True)
    final_quarter_loss = Column(Float, nullable=True)
    final_quarter_est_error = Column(Float, nullable=True)


# Columnas de métricas en el mismo orden que sweep_cells.csv
CELL_COLUMNS = (
    "mu", "seed", "status", "error_message", "accuracy", "holdout_mean",
    "mean_loss", "final_quarter_loss", "final_quarter_est_error",
)

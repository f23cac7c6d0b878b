"""
Persistencia de barridos en SQLite
Un archivo sweep.db por directorio de barrido, junto a los CSV/JSON
"""

import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Union

import pandas as pd
from sqlalchemy import create_engine, delete, event, select
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker
from sqlalchemy.pool import StaticPool

from database.models import CELL_COLUMNS, Base, SweepCellRecord

logger = logging.getLogger(__name__)


def make_engine(db_path: Union[str, Path]) -> Engine:
    """Engine SQLite con timeout; `:memory:` para pruebas"""
    if str(db_path) == ":memory:":
        engine = create_engine(
            "sqlite://",
            connect_args={"check_same_thread": False},
            poolclass=StaticPool,  # una sola conexión comparte la base en memoria
        )
    else:
        engine = create_engine(
            f"sqlite:///{Path(db_path)}",
            connect_args={"timeout": 20},  # timeout en segundos
            echo=False,  # True para depurar SQL
        )

    @event.listens_for(engine, "connect")
    def set_sqlite_pragma(dbapi_connection, connection_record):
        cursor = dbapi_connection.cursor()
        cursor.execute("PRAGMA synchronous=NORMAL")
        cursor.close()

    return engine


def init_database(engine: Engine) -> None:
    """Crear las tablas si no existen"""
    Base.metadata.create_all(bind=engine)


@contextmanager
def session_scope(engine: Engine) -> Iterator[Session]:
    """Sesión con commit al salir y rollback ante error"""
    session = sessionmaker(bind=engine, autoflush=False)()
    try:
        yield session
        session.commit()
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()


def _nullable(value):
    return None if pd.isna(value) else value


def save_sweep_cells(
    engine: Engine,
    cells: pd.DataFrame,
    *,
    sweep_id: str,
    stream: str,
    estimator: str,
) -> int:
    """Reemplaza las celdas del barrido `sweep_id`; devuelve la cantidad insertada"""
    init_database(engine)
    with session_scope(engine) as session:
        replaced = session.execute(delete(SweepCellRecord).where(SweepCellRecord.sweep_id == sweep_id)).rowcount
        if replaced:
            logger.info("Barrido %s repetido: se reemplazan %d celdas", sweep_id, replaced)
        for row in cells.to_dict(orient="records"):
            session.add(SweepCellRecord(
                sweep_id=sweep_id,
                stream=stream,
                estimator=estimator,
                mu=float(row["mu"]),
                seed=int(row["seed"]),
                status=row["status"],
                error_message=_nullable(row.get("error_message")),
                accuracy=_nullable(row.get("accuracy")),
                holdout_mean=_nullable(row.get("holdout_mean")),
                mean_loss=_nullable(row.get("mean_loss")),
                final_quarter_loss=_nullable(row.get("final_quarter_loss")),
                final_quarter_est_error=_nullable(row.get("final_quarter_est_error")),
            ))
    logger.info("Guardadas %d celdas del barrido %s", len(cells), sweep_id)
    return len(cells)


def load_sweep_cells(engine: Engine, sweep_id: str) -> pd.DataFrame:
    """Celdas de un barrido ordenadas por (μ, semilla)"""
    query = (
        select(SweepCellRecord)
        .where(SweepCellRecord.sweep_id == sweep_id)
        .order_by(SweepCellRecord.mu, SweepCellRecord.seed)
    )
    with session_scope(engine) as session:
        records = session.scalars(query).all()
        rows = [{name: getattr(r, name) for name in CELL_COLUMNS} for r in records]
    return pd.DataFrame(rows, columns=list(CELL_COLUMNS))

import numpy as np
import pandas as pd
import pytest
from sqlalchemy import func, select

from database.models import CELL_COLUMNS, SweepCellRecord
from utils.db import init_database, load_sweep_cells, make_engine, save_sweep_cells, session_scope


@pytest.fixture
def cells():
    return pd.DataFrame([
        {"mu": 0.1, "seed": 1, "status": "ok", "error_message": None, "accuracy": 0.91,
         "holdout_mean": 0.9, "mean_loss": 0.09, "final_quarter_loss": 0.08, "final_quarter_est_error": np.nan},
        {"mu": 0.01, "seed": 0, "status": "failed", "error_message": "ParameterError: μ", "accuracy": np.nan,
         "holdout_mean": np.nan, "mean_loss": np.nan, "final_quarter_loss": np.nan, "final_quarter_est_error": np.nan},
    ])


def test_save_and_load_in_memory(cells):
    engine = make_engine(":memory:")
    assert save_sweep_cells(engine, cells, sweep_id="abc", stream="sea", estimator="dfop") == 2
    loaded = load_sweep_cells(engine, "abc")
    assert list(loaded.columns) == list(CELL_COLUMNS)
    assert list(loaded["mu"]) == [0.01, 0.1]
    failed = loaded.iloc[0]
    assert failed["status"] == "failed"
    assert failed["accuracy"] is None or np.isnan(failed["accuracy"])
    assert loaded.iloc[1]["accuracy"] == pytest.approx(0.91)


def test_sweeps_are_kept_apart(tmp_path, cells):
    engine = make_engine(tmp_path / "sweep.db")
    save_sweep_cells(engine, cells, sweep_id="a", stream="sea", estimator="dfop")
    save_sweep_cells(engine, cells.iloc[:1], sweep_id="b", stream="sea", estimator="rls")
    assert len(load_sweep_cells(engine, "a")) == 2
    assert len(load_sweep_cells(engine, "b")) == 1
    assert load_sweep_cells(engine, "zzz").empty
    with session_scope(engine) as session:
        total = session.scalar(select(func.count()).select_from(SweepCellRecord))
    assert total == 3


def test_session_scope_rolls_back(tmp_path):
    engine = make_engine(tmp_path / "rollback.db")
    init_database(engine)
    with pytest.raises(RuntimeError):
        with session_scope(engine) as session:
            session.add(SweepCellRecord(sweep_id="x", stream="sea", estimator="dfop", mu=0.1, seed=0))
            session.flush()
            raise RuntimeError("abortar")
    assert load_sweep_cells(engine, "x").empty


def test_rerun_replaces_cells_of_same_sweep(tmp_path, cells):
    engine = make_engine(tmp_path / "rerun.db")
    save_sweep_cells(engine, cells, sweep_id="a", stream="sea", estimator="dfop")
    save_sweep_cells(engine, cells.iloc[:1], sweep_id="b", stream="sea", estimator="dfop")
    assert save_sweep_cells(engine, cells, sweep_id="a", stream="sea", estimator="dfop") == 2
    assert len(load_sweep_cells(engine, "a")) == 2
    assert len(load_sweep_cells(engine, "b")) == 1

import numpy as np
import pandas as pd
import pytest

from dfop_stream.errors import DataFormatError, SchemaError
from dfop_stream.estimators import Task
from simulation.csv_io import read_csv_stream, write_csv
from simulation.data_generator import gen_drifting_linear, gen_hyperplane_cls, gen_sea


def test_drifting_trace_survives_csv(tmp_path):
    trace = gen_drifting_linear(d=3, n=40, seed=1)
    path = write_csv(trace, tmp_path / "drift.csv")
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "f0,f1,f2,y,w0,w1,w2,s0,s1,s2,eps"

    back = read_csv_stream(path)
    assert back.task is Task.REGRESSION
    assert back.name == "drift"
    np.testing.assert_array_equal(back.X, trace.X)
    np.testing.assert_array_equal(back.y, trace.y)
    np.testing.assert_array_equal(back.w, trace.w)
    np.testing.assert_array_equal(back.eps, trace.eps)


def test_sea_csv_is_classification_with_stages(tmp_path):
    trace = gen_sea(30, 0.1, seed=2)
    back = read_csv_stream(write_csv(trace, tmp_path / "sea.csv"))
    assert back.task is Task.CLASSIFICATION
    assert not back.has_truth
    np.testing.assert_array_equal(back.stage, trace.stage)
    np.testing.assert_array_equal(back.label, trace.label)


def test_hyperplane_weights_survive_csv(tmp_path):
    trace = gen_hyperplane_cls(n=10, seed=1)
    assert trace.w is not None and trace.s is None
    back = read_csv_stream(write_csv(trace, tmp_path / "hyper.csv"))
    assert back.task is Task.CLASSIFICATION
    np.testing.assert_array_equal(back.w, trace.w)
    np.testing.assert_array_equal(back.stage, trace.stage)
    assert back.s is None and back.eps is None
    assert not back.has_truth


def test_minimal_csv(tmp_path):
    path = tmp_path / "min.csv"
    path.write_text("f0,f1,y\n1.0,2.0,0.5\n3.0,4.0,-1.5\n", encoding="utf-8")
    trace = read_csv_stream(path)
    assert trace.d == 2 and len(trace) == 2
    assert trace.task is Task.REGRESSION
    assert trace.concepts is None


def test_task_can_be_forced(tmp_path):
    path = tmp_path / "pm.csv"
    path.write_text("f0,y\n0.1,1\n0.2,-1\n", encoding="utf-8")
    assert read_csv_stream(path).task is Task.CLASSIFICATION
    assert read_csv_stream(path, task=Task.REGRESSION).task is Task.REGRESSION


def test_bad_value_reports_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("f0,f1,y\n1,2,3\n4,5,6\n7,abc,9\n", encoding="utf-8")
    with pytest.raises(DataFormatError) as info:
        read_csv_stream(path)
    assert info.value.line == 4
    assert info.value.exit_code == 2


def test_missing_value_reports_line(tmp_path):
    path = tmp_path / "hole.csv"
    path.write_text("f0,f1,y\n1,2,3\n4,,6\n", encoding="utf-8")
    with pytest.raises(DataFormatError) as info:
        read_csv_stream(path)
    assert info.value.line == 3


def test_extra_field_reports_line(tmp_path):
    path = tmp_path / "wide.csv"
    path.write_text("f0,y\n1,2\n3,4\n5,6,7\n", encoding="utf-8")
    with pytest.raises(DataFormatError) as info:
        read_csv_stream(path)
    assert info.value.line == 4


def test_extra_field_in_first_row_is_rejected(tmp_path):
    path = tmp_path / "shifted.csv"
    path.write_text("f0,f1,y\n0.5,1.0,-1,9\n1,2,3\n4,5,6\n", encoding="utf-8")
    with pytest.raises(DataFormatError) as info:
        read_csv_stream(path)
    assert info.value.line == 2
    assert info.value.exit_code == 2


def test_short_row_reports_line(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("f0,f1,y\n1,2,3\n4,5\n", encoding="utf-8")
    with pytest.raises(DataFormatError) as info:
        read_csv_stream(path)
    assert info.value.line == 3


@pytest.mark.parametrize("value", ["inf", "-inf", "nan"])
def test_non_finite_value_reports_line(tmp_path, value):
    path = tmp_path / "inf.csv"
    path.write_text(f"f0,y\n1,2\n{value},4\n", encoding="utf-8")
    with pytest.raises(DataFormatError) as info:
        read_csv_stream(path)
    assert info.value.line == 3
    assert info.value.exit_code == 2


def test_empty_and_missing_files(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(DataFormatError):
        read_csv_stream(empty)
    with pytest.raises(DataFormatError):
        read_csv_stream(tmp_path / "nope.csv")
    header_only = tmp_path / "header.csv"
    header_only.write_text("f0,y\n", encoding="utf-8")
    with pytest.raises(DataFormatError):
        read_csv_stream(header_only)


@pytest.mark.parametrize("header", [
    "x0,y",              # sin atributos f*
    "f0,f2,y",           # atributos no consecutivos
    "f0,f1",             # sin y
    "f0,f1,y,w0,s0,eps",  # verdad de dimensión distinta
    "f0,y,color",        # columna desconocida
    "f0,y,s0",           # saltos sin w
])
def test_schema_errors(tmp_path, header):
    path = tmp_path / "schema.csv"
    n_cols = len(header.split(","))
    path.write_text(header + "\n" + ",".join(["1"] * n_cols) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_csv_stream(path)


def test_written_file_reads_back_with_pandas(tmp_path):
    trace = gen_drifting_linear(d=2, n=5, seed=3)
    path = write_csv(trace, tmp_path / "sub" / "x.csv")
    df = pd.read_csv(path, float_precision="round_trip")
    assert list(df.columns[:3]) == ["f0", "f1", "y"]
    assert len(df) == 5

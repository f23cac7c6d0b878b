import json
import logging
from pathlib import Path

import numpy as np
import pytest

from dfop_stream.config import (
    DEFAULTS,
    FIELD_NAMES,
    RunConfig,
    load_config_file,
    resolve_config,
)
from dfop_stream.errors import DataFormatError, ParameterError, UsageError
from dfop_stream.estimators import RecursionVariant, Task
from dfop_stream.log import configure_logging
from dfop_stream.seeds import SeedOffset, derive_rng, derive_seed
from simulation.data_generator import StreamKind


def test_defaults_cover_every_field():
    assert set(DEFAULTS) == FIELD_NAMES
    cfg = RunConfig()
    assert cfg.stream_kind is StreamKind.SEA
    assert cfg.mu == 1e-3
    assert cfg.n_effective == 50_000
    assert cfg.variant is RecursionVariant.LEMMA


def test_seed_offsets_are_stable():
    assert [int(o) for o in SeedOffset] == [0, 1, 2, 3, 4]
    a = derive_rng(7, SeedOffset.STREAM).random(3)
    b = derive_rng(7, SeedOffset.STREAM).random(3)
    c = derive_rng(7, SeedOffset.HOLDOUT).random(3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    seed = derive_seed(7, SeedOffset.MONTECARLO, 3)
    assert 0 <= seed < 2**63 - 1
    assert seed == derive_seed(7, SeedOffset.MONTECARLO, 3)


def test_bias_follows_task_unless_given():
    assert RunConfig().bias_for(Task.CLASSIFICATION)
    assert not RunConfig().bias_for(Task.REGRESSION)
    assert not RunConfig(add_bias=False).bias_for(Task.CLASSIFICATION)
    assert RunConfig(add_bias=True).bias_for(Task.REGRESSION)


def test_out_dir_default():
    assert RunConfig(stream="sea", estimator="rls", seed=4).out_dir() == Path("runs") / "sea-rls-s4"
    assert RunConfig(out="x/y").out_dir() == Path("x/y")


def test_stream_spec_uses_derived_seed():
    spec = RunConfig(stream="drifting_linear", n=10, d=3, seed=2).stream_spec()
    assert spec.seed == derive_seed(2, SeedOffset.STREAM)
    assert spec.d == 3 and spec.n == 10


@pytest.mark.parametrize("kwargs, error", [
    ({"stream": "agrawal"}, UsageError),
    ({"estimator": "kalman"}, UsageError),
    ({"stream": "csv"}, UsageError),
    ({"n": 0}, ParameterError),
    ({"holdout_every": -1}, ParameterError),
    ({"workers": 0}, ParameterError),
])
def test_invalid_config(kwargs, error):
    with pytest.raises(error):
        RunConfig(**kwargs)


def test_precedence_cli_over_file_over_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"mu": 0.01, "seed": 3, "holdout-every": 100}), encoding="utf-8")
    cfg = resolve_config({"mu": 0.2, "seed": None, "config": str(path)}, path)
    assert cfg.mu == 0.2
    assert cfg.seed == 3
    assert cfg.holdout_every == 100
    assert cfg.window == DEFAULTS["window"]


def test_config_file_errors(tmp_path):
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"mu": 0.1, "color": "red"}), encoding="utf-8")
    with pytest.raises(UsageError):
        load_config_file(unknown)

    broken = tmp_path / "broken.json"
    broken.write_text("{\"mu\": 0.1,,}", encoding="utf-8")
    with pytest.raises(DataFormatError):
        load_config_file(broken)

    with pytest.raises(UsageError):
        load_config_file(tmp_path / "missing.json")


def test_to_dict_is_json_ready():
    data = RunConfig(mu_grid=(0.1, 0.01), seeds=(1,)).to_dict()
    assert json.loads(json.dumps(data))["mu_grid"] == [0.1, 0.01]
    assert RunConfig().with_overrides(mu=0.5).mu == 0.5


# =================== LOGGING ===================

def test_configure_logging_from_file_and_level(tmp_path, monkeypatch, restore_logging):
    ini = tmp_path / "logging.ini"
    ini.write_text(
        "[loggers]\nkeys = root\n\n[handlers]\nkeys = null\n\n[formatters]\nkeys =\n\n"
        "[logger_root]\nlevel = ERROR\nhandlers = null\n\n"
        "[handler_null]\nclass = NullHandler\nargs = ()\n",
        encoding="utf-8",
    )
    monkeypatch.setenv("DFOP_LOG_CONFIG", str(ini))
    configure_logging(level="debug")
    assert logging.getLogger().level == logging.ERROR
    assert logging.getLogger("dfop_stream").level == logging.DEBUG
    assert logging.getLogger("simulation").level == logging.DEBUG


def test_configure_logging_env_level(tmp_path, monkeypatch, restore_logging):
    monkeypatch.setenv("DFOP_LOG_CONFIG", str(tmp_path / "missing.ini"))
    monkeypatch.setenv("DFOP_LOG_LEVEL", "WARNING")
    configure_logging()
    assert logging.getLogger("dfop_stream").level == logging.WARNING

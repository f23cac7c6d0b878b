import logging

import pytest


@pytest.fixture
def restore_logging():
    """La CLI llama fileConfig; devolver el logging a como estaba"""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    package_levels = {name: logging.getLogger(name).level for name in ("dfop_stream", "simulation")}
    yield
    root.handlers[:] = handlers
    root.setLevel(level)
    for name, value in package_levels.items():
        logging.getLogger(name).setLevel(value)

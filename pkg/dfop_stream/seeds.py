"""Semillas derivadas: un subflujo aleatorio independiente por uso"""

from enum import IntEnum

import numpy as np


class SeedOffset(IntEnum):
    """Subflujos aleatorios derivados de la semilla raíz; nunca renumerar"""

    STREAM = 0
    HOLDOUT = 1
    CONCEPT = 2
    VERIFY = 3
    MONTECARLO = 4


def derive_rng(root_seed: int, offset: SeedOffset, *extra: int) -> np.random.Generator:
    return np.random.default_rng([int(root_seed), int(offset), *[int(e) for e in extra]])


def derive_seed(root_seed: int, offset: SeedOffset, *extra: int) -> int:
    """Entero de 63 bits para funciones que reciben una semilla"""
    return int(derive_rng(root_seed, offset, *extra).integers(0, 2**63 - 1))

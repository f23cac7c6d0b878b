"""
Configuración de corridas
Tabla de valores por defecto, archivo JSON (--config) y precedencia
bandera de CLI > archivo > DEFAULTS
"""

import json
import logging
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from dfop_stream.errors import DataFormatError, ParameterError, UsageError
from dfop_stream.estimators import EstimatorKind, RecursionVariant, Task
from dfop_stream.seeds import SeedOffset, derive_seed
from simulation.data_generator import STREAM_DEFAULTS, StreamKind, StreamSpec

logger = logging.getLogger(__name__)


# =================== VALORES POR DEFECTO ===================

DEFAULTS: Dict[str, Any] = {
    # flujo
    "stream": StreamKind.SEA.value,
    "n": None,                       # None → largo por defecto del flujo
    "seed": 0,
    "noise_rate": 0.0,
    "d": 5,
    "gamma": 1e-3,
    "sigma": 0.1,
    "csv": None,
    # estimador
    "estimator": EstimatorKind.DFOP.value,
    "mu": 1e-3,                      # recommend_mu(1000)
    "lam": None,                     # programa de λ para G-DFOP; None → 1 − μ
    "window": 500,
    "p0_scale": 1e3,
    "ridge_eps": 1e-8,
    "paper_literal_recursion": False,
    "add_bias": None,                # None → sí para clasificación
    # evaluación
    "holdout_every": 250,
    "holdout_size": 1000,
    "out": None,                     # None → runs/<stream>-<estimator>-s<seed>
    "resume": None,
    # barrido, verificación y cota
    "mu_grid": (1e-4, 1e-3, 1e-2, 1e-1, 0.5),
    "seeds": (0, 1, 2, 3, 4),
    "workers": 1,
    "n_configs": None,
    "delta": 0.05,
    "runs": 100,
    "mc": False,
}


@dataclass(frozen=True)
class RunConfig:
    stream: str = DEFAULTS["stream"]
    n: Optional[int] = DEFAULTS["n"]
    seed: int = DEFAULTS["seed"]
    noise_rate: float = DEFAULTS["noise_rate"]
    d: int = DEFAULTS["d"]
    gamma: float = DEFAULTS["gamma"]
    sigma: float = DEFAULTS["sigma"]
    csv: Optional[str] = DEFAULTS["csv"]
    estimator: str = DEFAULTS["estimator"]
    mu: float = DEFAULTS["mu"]
    lam: Optional[str] = DEFAULTS["lam"]
    window: int = DEFAULTS["window"]
    p0_scale: float = DEFAULTS["p0_scale"]
    ridge_eps: float = DEFAULTS["ridge_eps"]
    paper_literal_recursion: bool = DEFAULTS["paper_literal_recursion"]
    add_bias: Optional[bool] = DEFAULTS["add_bias"]
    holdout_every: int = DEFAULTS["holdout_every"]
    holdout_size: int = DEFAULTS["holdout_size"]
    out: Optional[str] = DEFAULTS["out"]
    resume: Optional[str] = DEFAULTS["resume"]
    mu_grid: Tuple[float, ...] = DEFAULTS["mu_grid"]
    seeds: Tuple[int, ...] = DEFAULTS["seeds"]
    workers: int = DEFAULTS["workers"]
    n_configs: Optional[int] = DEFAULTS["n_configs"]
    delta: float = DEFAULTS["delta"]
    runs: int = DEFAULTS["runs"]
    mc: bool = DEFAULTS["mc"]

    def __post_init__(self):
        try:
            kind = StreamKind(self.stream)
        except ValueError:
            valid = ", ".join(k.value for k in StreamKind)
            raise UsageError(f"flujo desconocido '{self.stream}' (válidos: {valid})") from None
        try:
            EstimatorKind(self.estimator)
        except ValueError:
            valid = ", ".join(k.value for k in EstimatorKind)
            raise UsageError(f"estimador desconocido '{self.estimator}' (válidos: {valid})") from None
        if kind is StreamKind.CSV and not self.csv:
            raise UsageError("--stream csv necesita --csv ARCHIVO")
        if self.n is not None and self.n < 1:
            raise ParameterError(f"n debe ser >= 1, recibido {self.n}")
        if self.holdout_every < 0 or self.holdout_size < 1:
            raise ParameterError("holdout_every debe ser >= 0 y holdout_size >= 1")
        if self.workers < 1:
            raise ParameterError("workers debe ser >= 1")
        object.__setattr__(self, "mu_grid", tuple(float(m) for m in self.mu_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    # ----- valores derivados -----

    @property
    def stream_kind(self) -> StreamKind:
        return StreamKind(self.stream)

    @property
    def estimator_kind(self) -> EstimatorKind:
        return EstimatorKind(self.estimator)

    @property
    def variant(self) -> RecursionVariant:
        return RecursionVariant.PAPER_LITERAL if self.paper_literal_recursion else RecursionVariant.LEMMA

    @property
    def task(self) -> Optional[Task]:
        return STREAM_DEFAULTS[self.stream_kind].task

    @property
    def n_effective(self) -> int:
        return self.n if self.n is not None else STREAM_DEFAULTS[self.stream_kind].n

    def bias_for(self, task: Task) -> bool:
        return task is Task.CLASSIFICATION if self.add_bias is None else bool(self.add_bias)

    def out_dir(self) -> Path:
        if self.out:
            return Path(self.out)
        return Path("runs") / f"{self.stream}-{self.estimator}-s{self.seed}"

    def stream_spec(self, seed: Optional[int] = None) -> StreamSpec:
        """StreamSpec con la semilla del subflujo STREAM derivada de la raíz"""
        root = self.seed if seed is None else seed
        return StreamSpec(
            kind=self.stream_kind,
            n=self.n_effective,
            seed=derive_seed(root, SeedOffset.STREAM),
            noise_rate=self.noise_rate,
            d=self.d,
            gamma=self.gamma,
            sigma=self.sigma,
            csv_path=self.csv,
        )

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["mu_grid"] = list(self.mu_grid)
        data["seeds"] = list(self.seeds)
        return data

    def with_overrides(self, **changes: Any) -> "RunConfig":
        return replace(self, **changes)


FIELD_NAMES = frozenset(f.name for f in fields(RunConfig))


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Lee un archivo JSON plano; claves desconocidas → UsageError"""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise UsageError(f"no existe el archivo de configuración {path}") from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"configuración JSON inválida en {path.name}: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise DataFormatError(f"{path.name} debe contener un objeto JSON")
    data = {key.replace("-", "_"): value for key, value in data.items()}
    unknown = sorted(set(data) - FIELD_NAMES)
    if unknown:
        raise UsageError(f"claves desconocidas en {path.name}: {', '.join(unknown)}")
    return data


def resolve_config(
    cli_values: Mapping[str, Any],
    config_path: Optional[Union[str, Path]] = None,
) -> RunConfig:
    """
    Precedencia: bandera de CLI > clave del archivo > DEFAULTS.
    En `cli_values` un None significa "bandera no dada".
    """
    merged: Dict[str, Any] = {}
    if config_path is not None:
        merged.update(load_config_file(config_path))
        logger.info("Configuración leída de %s", config_path)
    for key, value in cli_values.items():
        if key in FIELD_NAMES and value is not None:
            merged[key] = value
    return RunConfig(**merged)

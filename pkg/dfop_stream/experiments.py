"""
Experimentos reproducibles
- Corrida completa a partir de un RunConfig
- Barrido de μ × semillas (celdas independientes, opcionalmente en paralelo)
- Monte-Carlo de la cota de error de estimación
- Suites de verificación: forma cerrada, DFOP ↔ G-DFOP y recurrencia de R·w̃
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from dfop_stream.config import RunConfig
from dfop_stream.seeds import SeedOffset, derive_rng, derive_seed
from dfop_stream.errors import DataFormatError, DFOPError, NumericFailureError, ParameterError
from dfop_stream.estimators import (
    RecursionVariant,
    Sample,
    StreamingEstimator,
    dfop_init,
    dfop_update,
    gdfop_from_dfop,
    gdfop_update,
    load_snapshot,
    make_estimator,
    parse_lambda_schedule,
)
from dfop_stream.harness import RunResult, run_stream
from dfop_stream.oracle import (
    BoundParams,
    BoundTerms,
    History,
    RunTrace,
    closed_form_weighted_ls,
    dfop_oracle_prior,
    realized_bound_params,
    theorem2_terms,
    wtilde_recurrence_check,
)
from simulation.data_generator import LabeledTrace, gen_drifting_linear, generate_trace

logger = logging.getLogger(__name__)

VERIFY_TOLERANCE = 1e-8


# =================== CORRIDA ÚNICA ===================

def build_estimator(
    cfg: RunConfig,
    d_model: int,
    mu: Optional[float] = None,
    snapshot: Optional[Dict[str, Any]] = None,
) -> StreamingEstimator:
    schedule = parse_lambda_schedule(cfg.lam) if cfg.lam is not None else None
    return make_estimator(
        cfg.estimator_kind,
        d_model,
        mu=cfg.mu if mu is None else mu,
        schedule=schedule,
        window=cfg.window,
        p0_scale=cfg.p0_scale,
        ridge_eps=cfg.ridge_eps,
        variant=cfg.variant,
        snapshot=snapshot,
    )


def execute_run(
    cfg: RunConfig,
    *,
    mu: Optional[float] = None,
    seed: Optional[int] = None,
    trace: Optional[LabeledTrace] = None,
    record_states: bool = False,
) -> Tuple[LabeledTrace, RunResult]:
    """Genera (o recibe) el flujo y lo recorre; con cfg.resume continúa desde el snapshot"""
    root = cfg.seed if seed is None else seed
    if trace is None:
        trace = generate_trace(cfg.stream_spec(root))
    add_bias = cfg.bias_for(trace.task)
    d_model = trace.d + (1 if add_bias else 0)

    snapshot = load_snapshot(cfg.resume) if cfg.resume else None
    estimator = build_estimator(cfg, d_model, mu=mu, snapshot=snapshot)
    if snapshot is not None:
        logger.info("Reanudando desde %s en t=%d", cfg.resume, estimator.t)

    result = run_stream(
        trace,
        estimator,
        add_bias=add_bias,
        holdout_every=cfg.holdout_every,
        holdout_size=cfg.holdout_size,
        holdout_seed=derive_seed(root, SeedOffset.HOLDOUT),
        start=estimator.t,
        record_states=record_states,
    )
    return trace, result


def bound_report_for_run(
    trace: LabeledTrace,
    result: RunResult,
    *,
    gamma: float,
    sigma: float,
    delta: float,
    p0_scale: float,
) -> Dict[str, Any]:
    """Parámetros realizados, las tres partes de la cota y el error final de una corrida DFOP"""
    if result.P_history is None or result.series.est_error is None:
        raise ParameterError("la corrida no registró P(t) o no tiene verdad de terreno")
    state = result.estimator.state
    params = realized_bound_params(
        trace.X[-len(result.series):],
        result.P_history,
        mu=state.mu,
        delta=delta,
        gamma=gamma,
        sigma=sigma,
        R0_norm=1.0 / p0_scale,
        w_tilde0_norm=float(np.linalg.norm(trace.w_path[0] - result.w_hat_history[0])),
    )
    terms = theorem2_terms(params)
    error = float(result.series.est_error[-1])
    return {
        "params": params.to_dict(),
        "terms": terms.to_dict(),
        "est_error_final": error,
        "holds": bool(error <= terms.total),
    }


# =================== BARRIDO DE μ ===================

METRIC_COLUMNS = ("accuracy", "holdout_mean", "mean_loss", "final_quarter_loss", "final_quarter_est_error")


def _sweep_cell(job: Tuple[RunConfig, float, int]) -> Dict[str, Any]:
    """Una celda (μ, semilla); los errores quedan en la fila, no abortan el barrido"""
    cfg, mu, seed = job
    row: Dict[str, Any] = {"mu": mu, "seed": seed, "status": "ok", "error_message": None}
    row.update({name: np.nan for name in METRIC_COLUMNS})
    try:
        _, result = execute_run(cfg, mu=mu, seed=seed)
    except (DFOPError, FloatingPointError, np.linalg.LinAlgError) as exc:
        row.update(status="failed", error_message=f"{type(exc).__name__}: {exc}")
        return row
    summary = result.summary()
    holdout_key = f"{result.series.holdout_metric}_mean"
    row.update(
        accuracy=summary.get("accuracy_prequential", np.nan),
        holdout_mean=summary.get(holdout_key, np.nan),
        mean_loss=summary.get("mean_loss", np.nan),
        final_quarter_loss=summary.get("final_quarter_loss", np.nan),
        final_quarter_est_error=summary.get("final_quarter_est_error", np.nan),
    )
    return row


@dataclass
class SweepResult:
    cells: pd.DataFrame      # una fila por (μ, semilla), ordenadas
    summary: pd.DataFrame    # media y desviación por μ
    config: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_failed(self) -> int:
        return int((self.cells["status"] == "failed").sum())

    def best_mu(self, metric: str = "final_quarter_est_error", minimize: bool = True) -> float:
        column = self.summary[f"{metric}_mean"]
        return float(column.idxmin() if minimize else column.idxmax())

    def write(self, out_dir: Path) -> Dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "cells": out_dir / "sweep_cells.csv",
            "summary": out_dir / "sweep_summary.csv",
            "json": out_dir / "sweep.json",
        }
        self.cells.to_csv(paths["cells"], index=False, lineterminator="\n")
        self.summary.to_csv(paths["summary"], lineterminator="\n")
        payload = {
            "config": self.config,
            "n_failed": self.n_failed,
            "summary": json.loads(self.summary.reset_index().to_json(orient="records")),
        }
        paths["json"].write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        return paths


def summarize_cells(cells: pd.DataFrame) -> pd.DataFrame:
    ok = cells[cells["status"] == "ok"]
    grouped = ok.groupby("mu")[list(METRIC_COLUMNS)].agg(["mean", "std"])
    grouped.columns = [f"{metric}_{stat}" for metric, stat in grouped.columns]
    counts = cells.groupby("mu")["status"].agg(
        n_ok=lambda s: int((s == "ok").sum()),
        n_failed=lambda s: int((s == "failed").sum()),
    )
    return counts.join(grouped).sort_index()


def mu_sweep(cfg: RunConfig, mu_grid: Sequence[float], seeds: Sequence[int], workers: int = 1) -> SweepResult:
    """
    Corre cada (μ, semilla) con la misma configuración.

    Las filas se ordenan por (μ, semilla), así que el orden de la grilla o la
    cantidad de procesos no cambia el resultado.
    """
    grid = sorted({float(m) for m in mu_grid})
    seed_list = sorted({int(s) for s in seeds})
    if not grid:
        raise ParameterError("la grilla de μ está vacía")
    if not seed_list:
        raise ParameterError("la lista de semillas está vacía")
    jobs = [(cfg, mu, seed) for mu in grid for seed in seed_list]
    logger.info("Barrido: %d valores de μ × %d semillas, %d procesos", len(grid), len(seed_list), workers)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(job) for job in jobs]

    for row in rows:
        if row["status"] == "failed":
            logger.warning("Celda μ=%g semilla=%d falló: %s", row["mu"], row["seed"], row["error_message"])

    cells = pd.DataFrame(rows).sort_values(["mu", "seed"], kind="mergesort").reset_index(drop=True)
    return SweepResult(
        cells=cells,
        summary=summarize_cells(cells),
        config={**cfg.to_dict(), "mu_grid": grid, "seeds": seed_list},
    )


# =================== MONTE-CARLO DE LA COTA ===================

@dataclass
class MonteCarloResult:
    errors: np.ndarray        # ‖w(t) − ŵ(t)‖ al final de cada corrida exitosa
    bounds: np.ndarray        # cota evaluada en los parámetros realizados
    residuals: np.ndarray     # residuo máximo de la recurrencia por corrida
    terms: List[BoundTerms]
    n_failed: int = 0
    failures: List[str] = field(default_factory=list)
    bound_scale: float = 1.0

    @property
    def n_runs(self) -> int:
        return int(self.errors.shape[0]) + self.n_failed

    def coverage_at(self, scale: float) -> float:
        """Fracción de corridas con error ≤ scale·cota; las fallidas cuentan como no cubiertas"""
        if self.n_runs == 0:
            return float("nan")
        bound = scale * self.bounds
        covered = self.errors <= bound + 1e-12 * np.maximum(1.0, bound)
        return float(np.sum(covered)) / self.n_runs

    @property
    def coverage(self) -> float:
        return self.coverage_at(self.bound_scale)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_runs": self.n_runs,
            "n_failed": self.n_failed,
            "coverage": self.coverage,
            "bound_scale": self.bound_scale,
            "max_recurrence_residual": self.max_residual,
            "error_mean": float(np.mean(self.errors)) if self.errors.size else None,
            "bound_mean": float(np.mean(self.bounds)) if self.bounds.size else None,
            "terms_mean": {
                name: float(np.mean([getattr(t, name) for t in self.terms])) if self.terms else None
                for name in ("initialization", "noise", "drift", "total")
            },
            "failures": self.failures,
        }


def bound_montecarlo(
    d: int,
    n_runs: int,
    gamma: float,
    sigma: float,
    mu: float,
    delta: float,
    seed: int,
    *,
    n: int = 5000,
    p0_scale: float = 1e3,
    bound_scale: float = 1.0,
    min_runs: int = 50,
) -> MonteCarloResult:
    """
    Por corrida: flujo con deriva, DFOP desde ŵ(0) = 0, parámetros realizados
    (K, x*, σ*, γ*) y la cota en el t final contra ‖w(t) − ŵ(t)‖.
    """
    if n_runs < min_runs:
        raise ParameterError(f"se necesitan al menos {min_runs} corridas, recibido {n_runs}")
    if not (0.0 < mu < 1.0):
        raise ParameterError(f"μ debe estar en (0, 1), recibido {mu}")

    errors, bounds, residuals, terms, failures = [], [], [], [], []
    for r in range(n_runs):
        trace = gen_drifting_linear(d, n, gamma, sigma, derive_seed(seed, SeedOffset.MONTECARLO, r))
        estimator = make_estimator("dfop", d, mu=mu, p0_scale=p0_scale)
        try:
            result = run_stream(trace, estimator, add_bias=False, holdout_every=0, record_states=True)
            report = bound_report_for_run(trace, result, gamma=gamma, sigma=sigma, delta=delta, p0_scale=p0_scale)
            residual = wtilde_recurrence_check(RunTrace(
                X=trace.X, w_hat=result.w_hat_history, P=result.P_history, mu=mu,
                w_true=trace.w, s=trace.s, eps=trace.eps,
            ))
        except NumericFailureError as exc:
            failures.append(f"corrida {r}: {exc}")
            continue
        errors.append(report["est_error_final"])
        bounds.append(report["terms"]["total"])
        terms.append(BoundTerms(**{k: report["terms"][k] for k in ("initialization", "noise", "drift")}))
        residuals.append(residual)

    result = MonteCarloResult(
        errors=np.asarray(errors),
        bounds=np.asarray(bounds),
        residuals=np.asarray(residuals),
        terms=terms,
        n_failed=len(failures),
        failures=failures,
        bound_scale=bound_scale,
    )
    logger.info(
        "Monte-Carlo: cobertura %.3f en %d corridas (%d fallidas), residuo máximo %.2e",
        result.coverage, result.n_runs, result.n_failed, result.max_residual,
    )
    return result


# =================== VERIFICACIÓN ===================

@dataclass(frozen=True)
class CheckResult:
    name: str
    max_residual: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.max_residual <= self.tolerance)

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), "passed": self.passed}


@dataclass
class VerificationReport:
    checks: List[CheckResult]
    variant: RecursionVariant = RecursionVariant.LEMMA

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant.value,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }


def _random_config(rng: np.random.Generator, t: int):
    d = int(rng.integers(1, 6))
    mu = float(rng.choice([0.01, 0.1, 0.3]))
    p0_scale = float(rng.choice([1.0, 1e3]))
    X = rng.standard_normal((t, d))
    y = X @ rng.standard_normal(d) + 0.1 * rng.standard_normal(t)
    return d, mu, p0_scale, [Sample(x=x, y=v) for x, v in zip(X, y)]


def check_oracle_equivalence(
    n_configs: int = 50,
    t: int = 200,
    seed: int = 0,
    variant: RecursionVariant = RecursionVariant.LEMMA,
) -> CheckResult:
    """max_t ‖ŵ recursivo − ŵ forma cerrada‖ con λ ≡ 1−μ y R0 = P(0)⁻¹/μ"""
    rng = derive_rng(seed, SeedOffset.VERIFY, 0)
    worst = 0.0
    for _ in range(n_configs):
        d, mu, p0_scale, samples = _random_config(rng, t)
        R0, lam = dfop_oracle_prior(d, mu, p0_scale)
        state = dfop_init(d, mu, p0_scale, variant)
        for k, sample in enumerate(samples, start=1):
            state, _ = dfop_update(state, sample)
            history = History.from_samples(samples[:k], lam)
            exact = closed_form_weighted_ls(history, R0, np.zeros(d))
            worst = max(worst, float(np.linalg.norm(state.w_hat - exact)))
    return CheckResult(
        name="oracle_equivalence",
        max_residual=worst,
        tolerance=VERIFY_TOLERANCE,
        detail=f"{n_configs} configuraciones, t={t}, variante {variant.value}",
    )


def check_reconciliation(
    n_configs: int = 20,
    t: int = 500,
    seed: int = 0,
    variant: RecursionVariant = RecursionVariant.LEMMA,
) -> CheckResult:
    """DFOP contra G-DFOP con λ ≡ 1−μ y P_G(0) = μ·P_D(0)"""
    rng = derive_rng(seed, SeedOffset.VERIFY, 1)
    worst = 0.0
    for _ in range(n_configs):
        d, mu, p0_scale, samples = _random_config(rng, t)
        dfop = dfop_init(d, mu, p0_scale, variant)
        gdfop = gdfop_from_dfop(dfop_init(d, mu, p0_scale))
        for sample in samples:
            dfop, _ = dfop_update(dfop, sample)
            gdfop, _ = gdfop_update(gdfop, sample, 1.0 - mu)
            worst = max(worst, float(np.linalg.norm(dfop.w_hat - gdfop.w_hat)))
    return CheckResult(
        name="dfop_gdfop_reconciliation",
        max_residual=worst,
        tolerance=VERIFY_TOLERANCE,
        detail=f"{n_configs} configuraciones, t={t}, variante {variant.value}",
    )


def check_recurrence(n_configs: int = 5, n: int = 500, seed: int = 0) -> CheckResult:
    """Identidad R(t)w̃(t) = (1−μ)R(t−1)w̃(t−1) + μxε − R(t)s(t) sobre flujos con deriva"""
    rng = derive_rng(seed, SeedOffset.VERIFY, 2)
    worst = 0.0
    for _ in range(n_configs):
        d = int(rng.integers(1, 6))
        mu = float(rng.choice([0.01, 0.05, 0.1]))
        trace = gen_drifting_linear(d, n, gamma=1e-2, sigma=0.1, seed=int(rng.integers(0, 2**31)))
        result = run_stream(trace, make_estimator("dfop", d, mu=mu), add_bias=False,
                            holdout_every=0, record_states=True)
        worst = max(worst, wtilde_recurrence_check(RunTrace(
            X=trace.X, w_hat=result.w_hat_history, P=result.P_history, mu=mu,
            w_true=trace.w, s=trace.s, eps=trace.eps,
        )))
    return CheckResult(
        name="wtilde_recurrence",
        max_residual=worst,
        tolerance=VERIFY_TOLERANCE,
        detail=f"{n_configs} flujos con deriva, n={n}",
    )


def run_verification(
    seed: int = 0,
    variant: RecursionVariant = RecursionVariant.LEMMA,
    n_configs: Optional[int] = None,
    snapshot_path: Optional[Path] = None,
) -> VerificationReport:
    """Corre las tres suites; con snapshot_path además valida el archivo (IntegrityError si está corrupto)"""
    if snapshot_path is not None:
        load_snapshot(snapshot_path)
    checks = [
        check_oracle_equivalence(n_configs or 50, seed=seed, variant=variant),
        check_reconciliation(n_configs or 20, seed=seed, variant=variant),
        check_recurrence(min(n_configs or 5, 5), seed=seed),
    ]
    for check in checks:
        level = logging.INFO if check.passed else logging.WARNING
        logger.log(level, "%s: residuo %.3e (tolerancia %.0e) %s",
                   check.name, check.max_residual, check.tolerance, "OK" if check.passed else "FALLA")
    return VerificationReport(checks=checks, variant=variant)


def params_from_file(path: Path) -> BoundParams:
    """BoundParams desde un JSON con las mismas claves"""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"JSON inválido en {Path(path).name}: {exc.msg}", line=exc.lineno) from exc
    try:
        return BoundParams(**data)
    except TypeError as exc:
        raise ParameterError(f"parámetros de cota inválidos: {exc}") from exc

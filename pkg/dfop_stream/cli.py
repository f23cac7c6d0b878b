"""
Línea de comandos: generate, run, sweep, verify, bound
Códigos de salida: 0 éxito, 1 uso/parámetros, 2 datos, 3 falla numérica, 4 verificación
"""

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from dfop_stream import __version__
from dfop_stream.config import RunConfig, resolve_config
from dfop_stream.errors import DataFormatError, DFOPError, UsageError, VerificationError
from dfop_stream.estimators import EstimatorKind, save_snapshot
from dfop_stream.experiments import (
    bound_montecarlo,
    bound_report_for_run,
    execute_run,
    mu_sweep,
    params_from_file,
    run_verification,
)
from dfop_stream.log import configure_logging
from dfop_stream.oracle import theorem2_terms
from simulation.csv_io import write_csv
from simulation.data_generator import StreamKind, generate_trace
from utils.db import make_engine, save_sweep_cells

logger = logging.getLogger(__name__)


class DFOPArgumentParser(argparse.ArgumentParser):
    """argparse sale con código 2 ante errores de uso; acá son UsageError (código 1)"""

    def error(self, message: str):
        raise UsageError(message)


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de reales inválida: '{text}'") from None


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de enteros inválida: '{text}'") from None


def _common_options() -> argparse.ArgumentParser:
    common = DFOPArgumentParser(add_help=False)
    common.add_argument("--config", help="archivo JSON con claves de RunConfig")
    common.add_argument("--log-level", help="nivel de log (DEBUG, INFO, WARNING)")

    stream = common.add_argument_group("flujo")
    stream.add_argument("--stream", help="sea | hyperplane_cls | hyperplane_reg | drifting_linear | csv")
    stream.add_argument("--n", type=int, help="cantidad de muestras")
    stream.add_argument("--seed", type=int, help="semilla raíz")
    stream.add_argument("--noise-rate", type=float, help="probabilidad de invertir la etiqueta (SEA)")
    stream.add_argument("--d", type=int, help="dimensión de drifting_linear")
    stream.add_argument("--gamma", type=float, help="escala de la deriva s(t)")
    stream.add_argument("--sigma", type=float, help="escala del ruido ε(t)")
    stream.add_argument("--csv", help="archivo CSV para --stream csv")

    model = common.add_argument_group("estimador")
    model.add_argument("--estimator", help="dfop | gdfop | rls | window")
    model.add_argument("--mu", type=float, help="factor de olvido μ")
    model.add_argument("--lambda", dest="lam", help="λ de G-DFOP: constante o tramos '0.99@0,0.999@25000'")
    model.add_argument("--window", type=int, help="tamaño W de la línea base con ventana")
    model.add_argument("--p0-scale", type=float, help="P(0) = p0_scale·I")
    model.add_argument("--ridge-eps", type=float, help="regularización de la ventana")
    model.add_argument("--paper-literal-recursion", action="store_const", const=True,
                       help="usar el denominador 1−μ+xᵀPx tal como está impreso")
    model.add_argument("--bias", dest="add_bias", action="store_const", const=True,
                       help="agregar atributo constante 1")
    model.add_argument("--no-bias", dest="add_bias", action="store_const", const=False)

    evaluation = common.add_argument_group("evaluación")
    evaluation.add_argument("--holdout-every", type=int, help="pasos entre evaluaciones con datos frescos (0 desactiva)")
    evaluation.add_argument("--holdout-size", type=int, help="muestras por evaluación")
    evaluation.add_argument("--out", help="archivo o directorio de salida")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = DFOPArgumentParser(prog="dfop", description="Mínimos cuadrados recursivos con olvido para flujos con deriva")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=DFOPArgumentParser)

    generate = sub.add_parser("generate", parents=[common], help="escribir un flujo a CSV")
    generate.set_defaults(handler=cmd_generate)

    run = sub.add_parser("run", parents=[common], help="correr un estimador sobre un flujo")
    run.add_argument("--resume", help="snapshot.json desde el cual continuar")
    run.set_defaults(handler=cmd_run)

    sweep = sub.add_parser("sweep", parents=[common], help="barrido de μ × semillas")
    sweep.add_argument("--mu-grid", type=_float_list, help="valores de μ separados por coma")
    sweep.add_argument("--seeds", type=_int_list, help="semillas separadas por coma")
    sweep.add_argument("--workers", type=int, help="procesos en paralelo")
    sweep.set_defaults(handler=cmd_sweep)

    verify = sub.add_parser("verify", parents=[common], help="suites de verificación numérica")
    verify.add_argument("--snapshot", help="validar además la integridad de un snapshot")
    verify.add_argument("--n-configs", type=int, help="configuraciones aleatorias por suite")
    verify.set_defaults(handler=cmd_verify)

    bound = sub.add_parser("bound", parents=[common], help="cota de error de estimación")
    bound.add_argument("--delta", type=float, help="nivel δ de la cota")
    bound.add_argument("--runs", type=int, help="corridas de Monte-Carlo")
    bound.add_argument("--mc", action="store_const", const=True, help="estimar la cobertura por Monte-Carlo")
    bound.add_argument("--params", help="JSON con K, x_star, sigma_star, gamma_star, R0_norm, w_tilde0_norm, mu, t, delta")
    bound.add_argument("--run", dest="run_dir", help="directorio de una corrida drifting_linear")
    bound.set_defaults(handler=cmd_bound)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    return resolve_config(vars(args), args.config)


def _write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    return path


# =================== SUBCOMANDOS ===================

def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _config(args)
    trace = generate_trace(cfg.stream_spec())
    out = Path(cfg.out) if cfg.out else Path(f"{cfg.stream}-s{cfg.seed}.csv")
    write_csv(trace, out)
    print(f"✅ {len(trace)} muestras → {out}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config(args)
    with_bound = (
        cfg.stream_kind is StreamKind.DRIFTING_LINEAR
        and cfg.estimator_kind is EstimatorKind.DFOP
        and cfg.mu > 0
        and not cfg.resume
    )
    trace, result = execute_run(cfg, record_states=with_bound)

    out_dir = cfg.out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "config.json", cfg.to_dict())
    result.series.to_frame().to_csv(out_dir / "metrics.csv", index=False, lineterminator="\n")

    summary = {"stream": cfg.stream, "seed": cfg.seed, "n": len(trace), **result.summary()}
    if with_bound:
        summary["bound"] = bound_report_for_run(
            trace, result, gamma=cfg.gamma, sigma=cfg.sigma, delta=cfg.delta, p0_scale=cfg.p0_scale,
        )
    _write_json(out_dir / "summary.json", summary)
    save_snapshot(result.estimator.snapshot(), out_dir / "snapshot.json")

    headline = summary.get("accuracy_prequential")
    print(f"✅ {cfg.estimator} sobre {cfg.stream}: t={summary['t_final']}"
          + (f", AA={headline:.4f}" if headline is not None else "")
          + f" → {out_dir}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if not cfg.mu_grid:
        raise UsageError("--mu-grid no puede estar vacío")
    if not cfg.seeds:
        raise UsageError("--seeds no puede estar vacío")
    result = mu_sweep(cfg, cfg.mu_grid, cfg.seeds, workers=cfg.workers)

    out_dir = Path(cfg.out) if cfg.out else Path("runs") / f"sweep-{cfg.stream}-{cfg.estimator}"
    result.write(out_dir)
    sweep_id = hashlib.sha256(json.dumps(result.config, sort_keys=True).encode()).hexdigest()[:16]
    save_sweep_cells(make_engine(out_dir / "sweep.db"), result.cells,
                     sweep_id=sweep_id, stream=cfg.stream, estimator=cfg.estimator)

    print(result.summary.to_string(float_format=lambda v: f"{v:.4g}"))
    print(f"✅ {len(result.cells)} celdas ({result.n_failed} fallidas) → {out_dir}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _config(args)
    report = run_verification(
        seed=cfg.seed,
        variant=cfg.variant,
        n_configs=cfg.n_configs,
        snapshot_path=Path(args.snapshot) if args.snapshot else None,
    )
    payload = report.to_dict()
    if cfg.out:
        _write_json(Path(cfg.out), payload)
    for check in report.checks:
        mark = "OK   " if check.passed else "FALLA"
        print(f"{mark} {check.name}: residuo máximo {check.max_residual:.3e} (tolerancia {check.tolerance:.0e})")
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise VerificationError("verificación fallida: " + ", ".join(failed))
    return 0


def cmd_bound(args: argparse.Namespace) -> int:
    cfg = _config(args)
    if args.params:
        params = params_from_file(Path(args.params))
        payload: Dict[str, Any] = {"params": params.to_dict(), "terms": theorem2_terms(params).to_dict()}
    elif args.run_dir:
        summary_path = Path(args.run_dir) / "summary.json"
        try:
            summary = json.loads(summary_path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise UsageError(f"no existe {summary_path}") from exc
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"summary.json inválido: {exc.msg}", line=exc.lineno) from exc
        if "bound" not in summary:
            raise UsageError(f"{summary_path} no tiene cota (¿corrida DFOP sobre drifting_linear?)")
        payload = summary["bound"]
    else:
        n = cfg.n if cfg.n is not None else 5000
        single = cfg.with_overrides(stream=StreamKind.DRIFTING_LINEAR.value, estimator="dfop", n=n,
                                    holdout_every=0, add_bias=False, resume=None)
        trace, result = execute_run(single, record_states=True)
        payload = bound_report_for_run(trace, result, gamma=cfg.gamma, sigma=cfg.sigma,
                                       delta=cfg.delta, p0_scale=cfg.p0_scale)
        if cfg.mc:
            mc = bound_montecarlo(cfg.d, cfg.runs, cfg.gamma, cfg.sigma, cfg.mu, cfg.delta, cfg.seed,
                                  n=n, p0_scale=cfg.p0_scale)
            payload["montecarlo"] = mc.to_dict()

    if cfg.out:
        _write_json(Path(cfg.out), payload)
    print(json.dumps(payload, indent=2))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        configure_logging(level=args.log_level)
        return args.handler(args)
    except DFOPError as exc:
        print(exc.one_line(), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error[E_IO]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

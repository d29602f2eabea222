"""
Aplicação principal - Curriculab
Linha de comando do laboratório de currículo para tráfego multiagente.

Subcomandos:
    train-curriculum  Laço professor -> (recalibração) -> estudante
    train-baseline    Estudante contra NPCs de regras, com orçamento equivalente
    eval              Matriz estudantes x fontes de tráfego nos mapas de hold-out
    replay            Re-simula logs de cenário e verifica igualdade exata
    plot-data         CSVs de perfis de velocidade e da trajetória do currículo

Códigos de saída: 0 sucesso; 1 erro de configuração/dados/checkpoint; 2 erro inesperado.
"""

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

from pydantic import ValidationError

from app.config import settings
from app.core.errors import ConfigError, LabError
from app.schemas.run_config import RunConfig, load_run_config
from app.utils.logger import get_logger, setup_logger
from app.version import __version__

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNEXPECTED = 2


def _bool_flag(value: str) -> bool:
    text = value.strip().lower()
    if text in {"1", "true", "yes", "on"}:
        return True
    if text in {"0", "false", "no", "off"}:
        return False
    raise argparse.ArgumentTypeError(f"Valor booleano inválido: {value}")


def _student_source(value: str) -> tuple[str, str]:
    label, sep, source = value.partition("=")
    if not sep or not label or not source:
        raise argparse.ArgumentTypeError(f"Use LABEL=ORIGEM (ex.: cl=runs/cl/checkpoint), recebido: {value}")
    return label, source


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curriculab", description="Laboratório de currículo para tráfego multiagente")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="Arquivo YAML da execução (padrão: valores de fábrica)")
        p.add_argument("--seed", type=int, default=None, help="Semente raiz")
        p.add_argument("--out", type=str, default=None, help="Diretório de saída")

    p_cl = sub.add_parser("train-curriculum", help="Treina professor e estudante com o currículo automático")
    common(p_cl)
    p_cl.add_argument("--recalibrate", type=_bool_flag, default=None, metavar="BOOL", help="Ativa a recalibração")
    p_cl.add_argument("--fresh", action="store_true", help="Ignora checkpoint existente em --out")

    p_base = sub.add_parser("train-baseline", help="Treina o estudante contra NPCs de regras")
    common(p_base)
    p_base.add_argument("--fresh", action="store_true", help="Ignora checkpoint existente em --out")

    p_eval = sub.add_parser("eval", help="Avalia estudantes contra fontes de tráfego")
    common(p_eval)
    p_eval.add_argument("--episodes", type=int, default=None, help="Episódios por célula")
    p_eval.add_argument("--lambda", dest="lambda_value", type=float, default=None, help="Avalia um único λ")
    p_eval.add_argument("--teacher", type=str, default=None, help="Checkpoint do professor")
    p_eval.add_argument(
        "--student",
        type=_student_source,
        action="append",
        default=None,
        metavar="LABEL=ORIGEM",
        help="Estudante (checkpoint ou scripted:<nome>); pode repetir",
    )

    p_replay = sub.add_parser("replay", help="Verifica logs de cenário por re-simulação")
    p_replay.add_argument("logs", nargs="+", type=Path, help="Arquivos .jsonl ou diretórios com logs")

    p_plot = sub.add_parser("plot-data", help="Gera CSVs para gráficos externos")
    p_plot.add_argument("--source", type=Path, required=True, help="Diretório de uma execução ou avaliação")
    p_plot.add_argument("--out", type=str, default=None, help="Destino (padrão: --source)")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config)
    return config.with_overrides(
        seed=args.seed,
        recalibrate=getattr(args, "recalibrate", None),
        episodes=getattr(args, "episodes", None),
        lambda_value=getattr(args, "lambda_value", None),
        out=args.out,
    )


def _output_dir(config: RunConfig, command: str) -> Path:
    if config.output_dir:
        return Path(config.output_dir)
    return settings.output_path / f"{command}-seed{config.seed}"


def cmd_train_curriculum(args: argparse.Namespace) -> int:
    from app.services.training_service import CurriculumTrainer

    config = _load_config(args)
    out = _output_dir(config, args.command)
    trainer = CurriculumTrainer(config, out, resume=not args.fresh)
    state = trainer.run()
    print(f"curriculum finished at λ={state.current_lambda:+.2f} -> {out}")
    return EXIT_OK


def cmd_train_baseline(args: argparse.Namespace) -> int:
    from app.services.training_service import BaselineTrainer

    config = _load_config(args)
    out = _output_dir(config, args.command)
    BaselineTrainer(config, out, resume=not args.fresh).run()
    print(f"baseline finished -> {out}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    from app.services.evaluation_service import EvaluationService

    config = _load_config(args)
    evaluation = config.evaluation.model_dump()
    if args.teacher is not None:
        evaluation["teacher_checkpoint"] = args.teacher
    if args.student:
        evaluation["students"] = dict(args.student)
    config = RunConfig.model_validate({**config.model_dump(mode="json"), "evaluation": evaluation})
    out = _output_dir(config, args.command)
    report, _ = EvaluationService(config).run(out)
    for cell in report.cells:
        print(
            f"{cell.label}: SR={cell.success_rate:.3f} CR={cell.collision_rate:.3f} "
            f"OR={cell.offroad_rate:.3f} TR={cell.timeout_rate:.3f} "
            f"RP={cell.route_progress.mean:.3f}±{cell.route_progress.std:.3f} "
            f"v={cell.velocity.mean:.2f}±{cell.velocity.std:.2f}"
        )
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    from app.services.scenario_log_service import replay_scenario

    files: list[Path] = []
    for path in args.logs:
        files.extend(sorted(path.glob("*.jsonl")) if path.is_dir() else [path])
    if not files:
        raise ConfigError("Nenhum log de cenário encontrado")
    all_match = True
    for file in files:
        result = replay_scenario(file)
        all_match &= result.match
        print(f"{file}: {result.verdict} ({result.steps} steps)")
    return EXIT_OK if all_match else EXIT_ERROR


def cmd_plot_data(args: argparse.Namespace) -> int:
    from app.services.plot_data_service import export_plot_data

    for path in export_plot_data(args.source, args.out):
        print(path)
    return EXIT_OK


COMMANDS = {
    "train-curriculum": cmd_train_curriculum,
    "train-baseline": cmd_train_baseline,
    "eval": cmd_eval,
    "replay": cmd_replay,
    "plot-data": cmd_plot_data,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logger(
        log_level=settings.LOG_LEVEL,
        app_name=settings.APP_NAME,
        log_dir=settings.LOG_DIR,
        to_file=settings.file_logging_enabled,
    )
    settings.ensure_directories()
    logger.info(f"Curriculab v{__version__}: {args.command}")
    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"erro: configuração inválida\n{e}", file=sys.stderr)
        return EXIT_ERROR
    except LabError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"erro: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception:
        logger.exception(f"Unexpected failure in {args.command}")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())

"""
Experimento completo em escala de bancada.

Para cada semente: treina o currículo (com e sem recalibração) e o estudante de
referência, avalia os três estudantes e o controlador de regras contra tráfego de
regras, do professor (por λ) e vazio, e exporta os CSVs de gráficos. Ao final imprime
a taxa de sucesso de cada célula como média ± desvio entre sementes.

Uso:
    python scripts/run_desk_experiment.py --config configs/desk.yaml --seeds 0 1 2 --out runs/desk
"""

import argparse
import sys
from collections import defaultdict
from pathlib import Path

# Adiciona o diretório raiz ao path
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.config import settings
from app.schemas.report import EvalReport, MeanStd
from app.schemas.run_config import RunConfig, load_run_config
from app.services.evaluation_service import EvaluationService
from app.services.plot_data_service import export_plot_data
from app.services.training_service import CHECKPOINT_DIR, BaselineTrainer, CurriculumTrainer
from app.utils.logger import get_logger, setup_logger

setup_logger(
    log_level=settings.LOG_LEVEL,
    app_name=settings.APP_NAME,
    log_dir=settings.LOG_DIR,
    to_file=settings.file_logging_enabled,
)
logger = get_logger(__name__)


def _with_evaluation(config: RunConfig, **evaluation) -> RunConfig:
    data = config.model_dump(mode="json")
    data["evaluation"].update(evaluation)
    return RunConfig.model_validate(data)


def run_seed(base: RunConfig, seed: int, out: Path) -> EvalReport:
    """Treina e avalia uma semente; diretórios existentes são retomados"""
    config = base.with_overrides(seed=seed)
    seed_dir = out / f"seed{seed}"

    logger.info(f"=== seed {seed}: curriculum ===")
    CurriculumTrainer(config, seed_dir / "cl").run()
    logger.info(f"=== seed {seed}: curriculum + recalibration ===")
    CurriculumTrainer(config.with_overrides(recalibrate=True), seed_dir / "cl_recal").run()
    logger.info(f"=== seed {seed}: rule-based baseline ===")
    BaselineTrainer(config, seed_dir / "baseline").run()

    eval_config = _with_evaluation(
        config,
        teacher_checkpoint=str(seed_dir / "cl" / CHECKPOINT_DIR),
        students={
            "cl": str(seed_dir / "cl" / CHECKPOINT_DIR),
            "cl_recal": str(seed_dir / "cl_recal" / CHECKPOINT_DIR),
            "baseline": str(seed_dir / "baseline" / CHECKPOINT_DIR),
            "rule": "scripted:rule",
        },
    )
    eval_dir = seed_dir / "eval"
    report, _ = EvaluationService(eval_config).run(eval_dir)
    export_plot_data(eval_dir)
    export_plot_data(seed_dir / "cl")
    return report


def summarize(reports: list[EvalReport]) -> None:
    """Métricas por célula entre sementes: SR, progresso, velocidade, recompensa e velocidade dos NPCs"""
    metrics = ("SR", "RP", "v", "R", "v_npc")
    by_cell: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for report in reports:
        for cell in report.cells:
            values = by_cell[cell.label]
            values["SR"].append(cell.success_rate)
            values["RP"].append(cell.route_progress.mean)
            values["v"].append(cell.velocity.mean)
            values["R"].append(cell.reward.mean)
            values["v_npc"].append(cell.npc_velocity.mean)
    print()
    print("=" * 110)
    print(f"RESUMO ({len(reports)} sementes, média ± desvio entre sementes)")
    print("=" * 110)
    print(f"{'célula':<28}" + "".join(f"{name:>16}" for name in metrics))
    for label, values in by_cell.items():
        stats = [MeanStd.of(values[name]) for name in metrics]
        print(f"{label:<28}" + "".join(f"{s.mean:>9.3f}±{s.std:<6.3f}" for s in stats))


def main() -> int:
    parser = argparse.ArgumentParser(description="Experimento Curriculab em escala de bancada")
    parser.add_argument("--config", type=Path, default=Path("configs/desk.yaml"))
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--out", type=Path, default=settings.output_path / "desk")
    args = parser.parse_args()

    base = load_run_config(args.config)
    reports = []
    for seed in args.seeds:
        reports.append(run_seed(base, seed, args.out))
    summarize(reports)
    logger.success(f"Desk experiment finished -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

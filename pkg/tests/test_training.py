"""
Testes de orquestração do treino em escala mínima: arquivos produzidos, orçamento do
estudante de referência e retomada determinística a partir de checkpoint.
"""

from dataclasses import replace

import numpy as np
import pytest

from app.core.curriculum import Phase
from app.schemas.checkpoint import CheckpointMeta
from app.services.checkpoint_service import load_checkpoint
from app.services.training_service import (
    CHECKPOINT_DIR,
    CONFIG_FILE,
    CURRICULUM_LOG_FILE,
    METRICS_FILE,
    BaselineTrainer,
    CsvLog,
    CurriculumTrainer,
)

pytestmark = pytest.mark.slow


def _lines(path) -> list[str]:
    return path.read_text(encoding="utf-8").splitlines()


# === CSV ===


def test_csv_log_appends_and_truncates(tmp_path):
    log = CsvLog(tmp_path / "log.csv", ("a", "b"))
    log.append(a=1, b=0.5)
    log.append(a=2, b=None)
    log.append(a=3, b=True)
    assert _lines(tmp_path / "log.csv") == ["a,b", "1,0.5", "2,", "3,true"]
    log.truncate(1)
    assert _lines(tmp_path / "log.csv") == ["a,b", "1,0.5"]
    assert log.rows == 1


def test_csv_log_rejects_unknown_columns(tmp_path):
    log = CsvLog(tmp_path / "log.csv", ("a",))
    with pytest.raises(ValueError):
        log.append(z=1)


# === CURRÍCULO ===


def test_curriculum_run_writes_artifacts(tmp_path, tiny_config):
    state = CurriculumTrainer(tiny_config, tmp_path).run()
    n = tiny_config.curriculum
    assert len(_lines(tmp_path / METRICS_FILE)) == 1 + n.total_rounds * (n.n_teacher + n.n_student)
    assert len(_lines(tmp_path / CURRICULUM_LOG_FILE)) == 1 + n.total_rounds * n.n_student
    assert (tmp_path / CONFIG_FILE).is_file()
    _, meta = load_checkpoint(tmp_path / CHECKPOINT_DIR, expected_hash=tiny_config.config_hash())
    assert meta.next_round == n.total_rounds
    assert meta.next_phase == Phase.TEACHER
    assert meta.curriculum.to_state().current_index == state.current_index
    assert 0 <= state.current_index < len(state.lambda_set)


def _changed(before: dict[str, np.ndarray], store) -> bool:
    return any(not np.array_equal(value, store[name]) for name, value in before.items())


def test_teacher_phase_leaves_the_student_untouched(tmp_path, tiny_config):
    trainer = CurriculumTrainer(tiny_config, tmp_path)
    student, teacher = trainer.student.store.snapshot(), trainer.teacher.store.snapshot()
    trainer.run_teacher_phase(0)
    assert not _changed(student, trainer.student.store)
    assert _changed(teacher, trainer.teacher.store)


def test_student_phase_leaves_the_teacher_untouched(tmp_path, tiny_config):
    trainer = CurriculumTrainer(tiny_config, tmp_path)
    student, teacher = trainer.student.store.snapshot(), trainer.teacher.store.snapshot()
    trainer.run_student_phase(0)
    assert not _changed(teacher, trainer.teacher.store)
    assert _changed(student, trainer.student.store)


def test_recalibration_logs_every_level(tmp_path, tiny_config):
    config = tiny_config.with_overrides(recalibrate=True)
    CurriculumTrainer(config, tmp_path).run()
    phases = [line.split(",")[1] for line in _lines(tmp_path / CURRICULUM_LOG_FILE)[1:]]
    assert phases.count("recalibrate") == 9
    assert phases.count("student") == config.curriculum.n_student


def test_same_seed_gives_identical_logs(tmp_path, tiny_config):
    CurriculumTrainer(tiny_config, tmp_path / "a").run()
    CurriculumTrainer(tiny_config, tmp_path / "b").run()
    for name in (METRICS_FILE, CURRICULUM_LOG_FILE):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_resumed_run_matches_uninterrupted_run(tmp_path, tiny_config):
    config = tiny_config.model_validate(
        {**tiny_config.model_dump(mode="json"), "curriculum": {**tiny_config.curriculum.model_dump(), "total_rounds": 2}}
    )
    straight = tmp_path / "straight"
    CurriculumTrainer(config, straight).run()

    interrupted = tmp_path / "interrupted"
    trainer = CurriculumTrainer(config, interrupted)
    trainer.state = replace(trainer.state, round=0)
    trainer.run_teacher_phase(0)
    trainer.next_phase = Phase.STUDENT
    trainer._save()
    # linha escrita depois do checkpoint, como numa queda no meio da fase
    trainer.metrics.append(iteration=99, round=0, phase="student")

    resumed = CurriculumTrainer(config, interrupted)
    assert resumed.resumed
    resumed.run()

    for name in (METRICS_FILE, CURRICULUM_LOG_FILE):
        assert _lines(interrupted / name) == _lines(straight / name)
    first, _ = load_checkpoint(straight / CHECKPOINT_DIR)
    second, _ = load_checkpoint(interrupted / CHECKPOINT_DIR)
    assert first.keys() == second.keys()
    for key in first:
        np.testing.assert_array_equal(first[key], second[key])


def test_fresh_run_ignores_existing_checkpoint(tmp_path, tiny_config):
    CurriculumTrainer(tiny_config, tmp_path).run()
    fresh = CurriculumTrainer(tiny_config, tmp_path, resume=False)
    assert not fresh.resumed
    assert fresh.metrics.rows == 0
    assert len(_lines(tmp_path / METRICS_FILE)) == 1


# === REFERÊNCIA ===


def test_baseline_spends_the_curriculum_student_budget(tmp_path, tiny_config):
    trainer = BaselineTrainer(tiny_config, tmp_path)
    n = tiny_config.curriculum
    assert trainer.run() == n.total_rounds * n.n_student
    assert len(_lines(tmp_path / METRICS_FILE)) == 1 + n.total_rounds * n.n_student
    _, meta = load_checkpoint(tmp_path / CHECKPOINT_DIR)
    assert isinstance(meta, CheckpointMeta)
    assert meta.components == ["student"]
    assert meta.student_iterations == n.total_rounds * n.n_student


def test_finished_baseline_resumes_as_a_no_op(tmp_path, tiny_config):
    BaselineTrainer(tiny_config, tmp_path).run()
    before = _lines(tmp_path / METRICS_FILE)
    resumed = BaselineTrainer(tiny_config, tmp_path)
    assert resumed.run() == resumed.total_iterations
    assert _lines(tmp_path / METRICS_FILE) == before

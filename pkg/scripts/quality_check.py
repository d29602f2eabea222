#!/usr/bin/env python3
"""
Curriculab - verificação de qualidade antes de um experimento.
Executa Ruff (lint), Bandit (código) e Safety (dependências) e resume o resultado.
"""

import subprocess
import sys
from dataclasses import dataclass


@dataclass
class Check:
    name: str
    command: list[str]
    install_hint: str


CHECKS = [
    Check("Ruff (lint)", [sys.executable, "-m", "ruff", "check", "app", "tests", "scripts"], "pip install ruff"),
    Check("Bandit (código)", [sys.executable, "-m", "bandit", "-r", "app/", "-ll", "-f", "screen"], "pip install bandit"),
    Check("Safety (dependências)", [sys.executable, "-m", "safety", "check", "-r", "requirements.txt"], "pip install safety"),
]


def run_check(check: Check) -> bool:
    """Executa uma verificação e mostra a saída; retorna True se passou"""
    print("=" * 60)
    print(check.name)
    print("=" * 60)
    try:
        result = subprocess.run(check.command, capture_output=True, text=True)  # noqa: S603
    except FileNotFoundError:
        print(f"[ERROR] Ferramenta não encontrada. Execute: {check.install_hint}")
        return False

    print(result.stdout)
    if result.stderr:
        print("[STDERR]", result.stderr)
    if result.returncode == 0:
        print("[OK]\n")
        return True
    print(f"[FAIL] código de saída {result.returncode}\n")
    return False


def main() -> int:
    results = {check.name: run_check(check) for check in CHECKS}

    print("=" * 60)
    print("RESUMO")
    print("=" * 60)
    for name, ok in results.items():
        print(f"{name:<24} {'[OK]' if ok else '[FAIL]'}")
    return 0 if all(results.values()) else 1


if __name__ == "__main__":
    sys.exit(main())

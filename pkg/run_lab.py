"""Entry point da linha de comando do Curriculab.

Uso:
    python run_lab.py train-curriculum --config configs/desk.yaml --out runs/cl
    python run_lab.py eval --config configs/desk.yaml --teacher runs/cl/checkpoint --out runs/eval
    python run_lab.py replay runs/eval/scenarios
"""

import sys

from app.main import main

if __name__ == "__main__":
    sys.exit(main())

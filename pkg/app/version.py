# app/version.py
"""Versão centralizada do Curriculab - usada pela CLI, pelos checkpoints e pelos logs de cenário."""

__version__ = "0.3.0"

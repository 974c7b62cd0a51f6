"""Triage pipeline for code-forge repositories self-promoted as
"for educational purpose only"."""

__version__ = "0.1.0"

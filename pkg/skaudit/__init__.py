"""Audit tools for secret-key distillation codes built from Slepian-Wolf binning."""

__version__ = "0.1.0"

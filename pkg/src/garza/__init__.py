"""Loewner-dominating design reduction for nonlinear regression models."""

__version__ = "0.1.0"

"""Latency-optimal parameters and verification tools for slotless neighbor discovery."""

from .model import INFINITE, PiConfig, RadioParams, Variant, VariantSolution, duty_cycle, gamma

__all__ = ["INFINITE", "PiConfig", "RadioParams", "Variant", "VariantSolution", "duty_cycle", "gamma"]

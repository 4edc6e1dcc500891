"""Hermite rank instability and perturbed limit theorems for long-memory sums."""

__version__ = "0.1.0"

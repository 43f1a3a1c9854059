"""Hybrid quantum-classical voltage-stability classification with adversarial tooling."""

__version__ = "0.1.0"

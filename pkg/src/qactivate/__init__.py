"""Activation of nonclassical correlations into system-ancilla entanglement."""

__version__ = "0.1.0"

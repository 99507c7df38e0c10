"""Deterministic single-process federated learning simulator for tabular anomaly detection."""

__version__ = "0.1.0"

"""Visibility-graph and spectral voice features with late-fusion risk scoring."""

__version__ = "0.1.0"

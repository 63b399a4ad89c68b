"""Operator networks with uncertainty quantification for post-fault grid dynamics."""

__version__ = "0.1.0"

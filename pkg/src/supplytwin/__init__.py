"""Executable real and ideal models of a supply chain with verifiable digital twins."""

__version__ = "0.1.0"

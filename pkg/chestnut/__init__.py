"""Synthetic mobile edge QoS dataset generator."""

__version__ = "0.1.0"

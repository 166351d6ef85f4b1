"""Microscopic traffic simulation of automated lane-changing in urban networks."""

__version__ = "0.1.0"

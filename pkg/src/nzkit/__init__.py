"""Projection-operator toolkit for reduced open-system dynamics."""

__version__ = "0.1.0"

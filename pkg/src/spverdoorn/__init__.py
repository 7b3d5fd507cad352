"""Spatial econometrics of Verdoorn's law for regional sector data."""

__version__ = "0.1.0"

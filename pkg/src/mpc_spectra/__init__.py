"""Horizon-independent spectral bounds for condensed constrained-LQR problems."""

__version__ = "0.1.0"

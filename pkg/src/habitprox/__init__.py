"""Generalized proximal-point problems over quasi-distances with resistance to change."""

__version__ = "0.1.0"

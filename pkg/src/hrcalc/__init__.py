"""Quaternion HR calculus, widely linear estimation, networks, QNNs and LQR."""

__version__ = "0.1.0"

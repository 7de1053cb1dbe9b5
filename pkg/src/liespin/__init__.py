"""Symbolic and numeric Lie derivatives of tensor and spinor fields on charts."""

__version__ = "0.1.0"

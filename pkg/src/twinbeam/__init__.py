"""Beam prediction trained on a geometric replica of the deployment site."""

__version__ = "0.1.0"

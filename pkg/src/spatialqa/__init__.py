"""Spatial-reasoning VQA generation from 2D detection annotations."""

__version__ = "0.1.0"

"""Offline speech segmentation with x-vector voice activity detection."""

__version__ = "0.1.0"

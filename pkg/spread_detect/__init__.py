"""Adaptive detection of range-spread targets in subspace interference."""

from .app import DetectionSimulator

__all__ = ["DetectionSimulator"]

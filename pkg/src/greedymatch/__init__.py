"""Greedy weighted matching for device-to-device resource sharing."""

__version__ = "0.1.0"

"""Deterministic 2-D simulator and motor-sizing toolkit for an over-the-row
differential-drive sprayer robot."""

__version__ = "0.1.0"

"""Centroid-based classification of high-dimension, low-sample-size data."""

__version__ = "0.1.0"

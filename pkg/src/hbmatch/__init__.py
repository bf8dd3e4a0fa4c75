"""Privacy-preserving iris/face template matching under exact RLWE encryption."""

__version__ = "0.1.0"

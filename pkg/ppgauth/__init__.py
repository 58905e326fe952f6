"""Camera PPG biometric authentication pipeline."""

__version__ = "1.0.0"

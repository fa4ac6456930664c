"""labelmend - label error detection and refurbishment for segmentation training."""

__version__ = "0.1.0"

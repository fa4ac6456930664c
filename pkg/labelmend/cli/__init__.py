"""Command-line interface for labelmend."""

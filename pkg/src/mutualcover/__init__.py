"""Two-line ruin model with mutual deficit coverage."""

__version__ = "0.1.0"

"""H2 analysis and projection-based reduction of linear time-periodic systems."""

__version__ = "0.1.0"

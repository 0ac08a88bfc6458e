"""Time-series generation by contrastive imitation."""

__version__ = "0.1.0"

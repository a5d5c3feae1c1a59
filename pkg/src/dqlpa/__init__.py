"""Deep-Q-learning downlink power allocation for multi-cell interfering networks."""

__version__ = "0.1.0"

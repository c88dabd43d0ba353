"""Active-learning speaker corpus construction and speaker generation,
exercised end to end on a deterministic synthetic world."""

__version__ = "0.1.0"

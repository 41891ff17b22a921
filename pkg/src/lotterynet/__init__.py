"""Commit-reveal lotteries over shuffling networks."""

__version__ = "0.1.0"

"""Existence analysis and truncation solving for weakly homogeneous
optimization problems."""

__version__ = "0.1.0"

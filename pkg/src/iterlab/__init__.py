"""iterlab: iterative summation, stochastic approximation and recursive
estimation procedures with a reproducible experiment harness."""

__version__ = "0.1.0"

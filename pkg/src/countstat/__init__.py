"""Frequentist and Bayesian inference for Poisson counting experiments."""

__version__ = "0.1.0"

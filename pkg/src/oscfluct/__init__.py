"""Oscillator chain with exchange noise: exact Gibbs sampling, event-driven
dynamics, fluctuation-field statistics, and the spectral machinery of its
diffusive / 3/2-stable / stochastic-Burgers scaling limits."""

__version__ = "0.1.0"

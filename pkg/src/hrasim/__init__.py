"""Human-reliability toolkit: cognitive task simulation, synthetic duration
sequences, time-failure quantification and Bayesian-network risk ranking."""

__version__ = "0.1.0"

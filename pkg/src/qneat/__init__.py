"""Evolving variational quantum circuits with a NEAT-style genetic algorithm."""

__version__ = "0.1.0"

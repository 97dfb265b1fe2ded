"""Simulation of a 1 -> 2 probabilistic quantum cloning machine on three NMR spins."""

__version__ = "0.1.0"

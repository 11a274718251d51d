"""
Stochastic and deterministic simulation of a fast-slow prey-predator model near prey extinction.
"""

__version__ = '1.0'

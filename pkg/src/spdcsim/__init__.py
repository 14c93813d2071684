"""Simulation of pulsed type-II SPDC polarisation-entangled pair sources."""

__version__ = "0.1.0"

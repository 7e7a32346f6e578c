"""Crystalline ground states of lattice bosons with long-range density-density interactions."""
__version__ = "0.1.0"

"""Weak-coupling diagram expansion of a lattice Fermi gas near equilibrium."""

__version__ = "0.1.0"

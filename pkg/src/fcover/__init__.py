"""Functional covering and separation numbers on grids."""
__version__ = "0.1.0"

"""Kinetic wealth exchange with preferential trader selection and the
weighted trade network it grows."""

__version__ = "0.1.0"

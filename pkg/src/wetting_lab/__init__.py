"""Desk-scale toolkit for the semi-infinite Ising model with a wall and decaying fields."""

__version__ = "0.1.0"

"""Numerical companion for L^p Korn inequalities and their sharp constants."""
__version__ = "0.1.0"

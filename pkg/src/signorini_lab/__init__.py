"""Numerical experiments for the thin obstacle (Signorini) problem on a half box."""

__version__ = "0.1.0"

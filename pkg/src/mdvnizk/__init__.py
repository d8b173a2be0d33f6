"""Reusable malicious-designated-verifier NIZK arguments compiled from sigma protocols."""

__version__ = "0.1.0"

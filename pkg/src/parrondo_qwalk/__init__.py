"""Parrondo-dynamics quantum-walk cryptography simulator."""

__version__ = "0.1.0"

"""Helicity of exact forms, Stokes checks, and capacity-recognition verification."""

__version__ = "0.1.0"

"""Photoacoustic reconstruction in a reflecting cavity by gradual time reversal.

Forward simulation (series and finite differences), reconstruction, a modal error oracle,
and a verified Bessel-zero engine.
"""
__version__ = "0.1.0"

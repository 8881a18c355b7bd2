"""Smooth circle diffeomorphisms built by conjugating rational rotations,
with certificates for the open conditions and dimension estimates of their
invariant measures."""

__version__ = "0.1.0"

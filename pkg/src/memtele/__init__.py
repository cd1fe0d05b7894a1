"""Monte Carlo and analytic simulator of photon-to-atomic-memory teleportation."""

__version__ = "0.1.0"

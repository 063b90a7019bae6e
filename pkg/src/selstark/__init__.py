"""Verification engine for finite-level Selmer, Stark-system, and
determinant-lattice algebra over chain-ring group rings."""

__version__ = "0.1.0"

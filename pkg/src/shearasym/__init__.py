"""Matched-asymptotic construction for homoenergetic simple shear with soft potentials."""

__version__ = "0.1.0"

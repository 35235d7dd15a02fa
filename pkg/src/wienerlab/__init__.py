"""Wiener lemma, Koopman-von Neumann densities and Goldstein limits at desk scale."""

__version__ = "0.1.0"

"""Warped-convolution deformations of the free scalar field on a truncated Fock space."""

__version__ = "0.1.0"

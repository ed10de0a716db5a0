"""Steering, incompatibility and the state-channel duality, in finite and Gaussian form."""

__version__ = "0.1.0"

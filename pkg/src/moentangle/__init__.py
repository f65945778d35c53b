"""Microwave-optical entanglement in a strongly coupled electro-optomechanical device."""

__version__ = "0.1.0"

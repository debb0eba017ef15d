"""Certify, refute, or gather evidence for Jamison and Kazhdan properties of integer sequences."""

__version__ = "0.1.0"

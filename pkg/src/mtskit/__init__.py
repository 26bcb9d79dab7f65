"""Multiagent transition systems: refinement, faults and grassroots composition."""
__version__ = "0.1.0"

"""Density-agency guided semi-supervised crowd counting at desk scale."""

__version__ = "0.1.0"

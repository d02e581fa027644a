"""Liquidity provision games on concentrated-liquidity AMMs."""

__version__ = "0.1.0"

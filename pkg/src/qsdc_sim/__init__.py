"""Monte Carlo simulator for two-phase quantum secure direct communication."""

__version__ = "0.1.0"

"""Deterministic multi-agent mission simulator with belief networks, directed
capability/predictability/integrity trust edges, and a satisficing trust gate."""

__version__ = "0.1.0"

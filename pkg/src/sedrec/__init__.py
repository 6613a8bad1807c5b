"""Entity-graph shortest-distance scoring for content-based news recommendation."""

__version__ = "0.1.0"

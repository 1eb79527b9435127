"""Stability radii, transfer-function suprema and input-output norms of
finite-dimensional linear systems under l^p norms."""

__version__ = "0.1.0"

"""Discrete-epoch ride-pooling fleet simulator with advance requests."""

__version__ = "0.1.0"

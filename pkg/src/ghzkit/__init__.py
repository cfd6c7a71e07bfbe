"""Four-qubit GHZ bases, k-separability witnesses and simulated photonic read-out."""

__version__ = "0.1.0"

"""First-order constraint solving in decomposable theories."""

__version__ = "0.1.0"

"""Type-directed program synthesis by local search in typed neighborhoods."""

__version__ = "0.1.0"

"""Reference inference service for the textguard backend wire protocol."""

__version__ = "0.1.0"

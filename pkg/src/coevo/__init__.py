"""Cooperative, ensemble evolutionary optimization over sparsified graph domains."""

__version__ = "0.1.0"

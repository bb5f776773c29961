"""Bundled message database, default configuration and scenarios."""

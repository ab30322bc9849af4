"""Shared helpers: logging setup and output file handling."""

"""Bundled JSON schemas for CLI inputs and outputs."""

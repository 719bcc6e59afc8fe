"""Scenario drivers built on the library modules."""

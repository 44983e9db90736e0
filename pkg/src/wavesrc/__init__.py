"""Inverse source problems for the time-domain wave equation."""

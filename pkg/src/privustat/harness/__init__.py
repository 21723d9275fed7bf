"""Experiment runner, verification audits, and the command-line interface."""

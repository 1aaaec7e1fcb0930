"""Shipped scenario and pipeline configuration files."""

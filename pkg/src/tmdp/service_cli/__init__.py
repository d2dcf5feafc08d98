"""Operational shell: synthetic generation, run store, CLI, and HTTP API."""

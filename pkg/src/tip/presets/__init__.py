"""Shipped planner presets (JSON documents)."""

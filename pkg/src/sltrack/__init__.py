"""Self-assessing single-object tracking in clutter with subjective logic."""

__version__ = "0.1.0"

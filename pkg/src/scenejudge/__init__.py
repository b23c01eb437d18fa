"""Tool-using judge for text-to-3D-scene generation."""

__version__ = "0.1.0"

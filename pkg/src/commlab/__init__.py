"""commlab: a workbench for communication complexity experiments."""

__version__ = "0.1.0"

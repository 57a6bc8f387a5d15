"""Maximal hypersurfaces in flat-fiber Robertson-Walker spacetimes."""

__version__ = "0.1.0"

"""Feature tracking in time-varying fields on simplicial spacetime meshes."""

__version__ = "0.1.0"

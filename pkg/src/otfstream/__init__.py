"""Simulation and live testbed for on-the-fly transcoding in adaptive point cloud streaming."""

__version__ = "0.1.0"

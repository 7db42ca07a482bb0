"""Topology-controlled opportunistic routing for wireless ad hoc networks."""

__version__ = "0.1.0"

"""Deterministic simulator for minimal self-stabilizing asynchronous unison on chains and rings."""

from .core import CORRECT, CRASHED, Byzantine, Topology, build_topology
from .engine import RunParams, RunStats, Trace, run
from .rules import Rule

__all__ = ["CORRECT", "CRASHED", "Byzantine", "Topology", "build_topology", "RunParams", "RunStats", "Trace", "run", "Rule"]
__version__ = "0.1.0"

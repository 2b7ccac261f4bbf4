"""Optimization of program states for programmable quantum processors."""

from . import qcore, processors, costs, sdpsolve, optim

__all__ = ["qcore", "processors", "costs", "sdpsolve", "optim"]
__version__ = "0.1.0"

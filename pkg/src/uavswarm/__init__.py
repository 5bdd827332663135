"""Decentralized UAV swarm mobility simulator.

Simulates a swarm of fixed-wing UAVs exploring a gridded mission area while
trying to stay connected to an aerial base station. Four mobility policies
are provided (repel-pheromone, BS-connectivity-aware pheromone, a
potential-field reference, and a trained Q-network), together with the
hello-message protocol, coverage/connectivity metrics, and a deterministic
experiment harness.
"""

from uavswarm.backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"

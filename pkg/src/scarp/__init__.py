"""Stochastic capacitated arc routing: solver library and CLI.

Builds vehicle trip plans on undirected networks with Gaussian-perturbed
edge demands, evaluates their robustness both in closed form and by
Monte-Carlo replication, and optimizes a catalogue of deterministic and
stochastic objectives with a hybrid genetic algorithm.
"""

from ._kernels import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]

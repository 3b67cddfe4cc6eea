"""k-route cuts: approximation algorithms, LP relaxations, exact oracles and hardness gadgets."""

__version__ = "0.1.0"

from .graph import CutInstance, Edge, MultiGraph, generate_instance, parse_instance, write_instance  # noqa: E402
from .algorithms import CutSolution, solve  # noqa: E402

__all__ = ["CutInstance", "CutSolution", "Edge", "MultiGraph", "generate_instance", "parse_instance",
           "solve", "write_instance", "__version__"]

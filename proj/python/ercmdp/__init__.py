"""Entropy-regularized constrained MDP solvers, oracles and generators."""

from ercmdp._core import *  # noqa: F401,F403
from ercmdp._core import __doc__  # noqa: F401

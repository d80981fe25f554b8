"""structopt: matrix-variate wireless designs under structure constraints.

Solvers for diagonal-structure problems (uplink MU-SIMO power
allocation, amplitude-adjustable IRS via WMMSE, block-diagonal MU-MIMO)
and constant-modulus problems (hybrid analog beamforming, fully-passive
IRS phase shifts), verified against finite-difference, projected-
gradient and brute-force grid oracles.
"""

from . import (  # noqa: F401
    baselines,
    channel_sim,
    cm_problems,
    cm_solvers,
    derivatives,
    diag_solvers,
    linalg,
    scenarios,
)
from .cm_problems import make_problem  # noqa: F401
from .scenarios import SolverReport  # noqa: F401

__version__ = "0.1.0"

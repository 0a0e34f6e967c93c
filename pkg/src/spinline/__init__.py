"""Dynamical susceptibility of a uniaxial spin coupled to a bosonic bath.

The reduced density matrix obeys a Redfield master equation written in
Hubbard operators; its three-term block recurrence is solved exactly with
matrix continued fractions for spins up to a few hundred.
"""

from .bath import BathSpec, CouplingSpec, rate
from .classical import crossover_distance, gekht_lineshape
from .mcf import SolverError, solve_shifted, stationary_state
from .recurrence import build_blocks
from .response import (LinearResponse, Spectrum, default_grid, resonance_grid,
                       static_susceptibility_check, sum_rule, susceptibility, sweep)
from .spin import SpinModel

__all__ = [
    "BathSpec", "CouplingSpec", "LinearResponse", "SolverError", "Spectrum", "SpinModel",
    "build_blocks", "crossover_distance", "default_grid", "gekht_lineshape", "rate",
    "resonance_grid", "solve_shifted", "static_susceptibility_check", "stationary_state",
    "sum_rule", "susceptibility", "sweep",
]
__version__ = "0.1.0"

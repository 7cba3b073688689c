"""Independent checks of a closed loop: roots, simulation, dissipation, empirical L2 gain."""

from .closedloop import ClosedLoop, closed_loop, plain_loop
from .dissipation import DissipationReport, GainEstimate, dissipation_check, functional_values, input_library, l2_gain_estimate
from .simulate import Trajectory, distributed_state, simpson_weights, simulate, write_two_column
from .spectrum import SpectrumReport, cheb, clenshaw_curtis, generator_matrix, spectral_abscissa

__all__ = [
    "ClosedLoop",
    "closed_loop",
    "plain_loop",
    "DissipationReport",
    "GainEstimate",
    "dissipation_check",
    "functional_values",
    "input_library",
    "l2_gain_estimate",
    "Trajectory",
    "distributed_state",
    "simpson_weights",
    "simulate",
    "write_two_column",
    "SpectrumReport",
    "cheb",
    "clenshaw_curtis",
    "generator_matrix",
    "spectral_abscissa",
]

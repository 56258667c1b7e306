"""Numerical bounds on the scaling exponent of ternary polar codes."""
from .channel import (Channel, PosteriorVector, capacity, minus_transform, plus_transform,
                      qsc_channel)
from .envelope import EnvelopeTable, build_gstar
from .gfunc import GTable, SolverOptions, build_gtable, solve_g
from .qsc import QscChannel, eps_l_qsc, g_qsc, h_q, h_q_inv
from .scaling import F0Spec, ScalingReport, fk_recursion, scaling_report

__version__ = "0.1.0"

from .grid import Grid, Field, fourier, inverse_fourier, plane_wave
from .potentials import Potential
from .resolvent import ResolventConfig, apply_resolvent
from .stationary import build_stationary_state, neumann_invert
from .propagator import evolve, initial_to_final, final_value_solve

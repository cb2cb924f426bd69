"""Equivariant Pyragas control of discrete waves.

Find a symmetric periodic orbit, build its twisted monodromy matrix, decide
whether scalar-gain equivariant delayed feedback can stabilize it, and
check the verdict against a discretized delay operator and direct
simulation.
"""
from .charfn import (CharFunction, RootCountMismatch, RootSet, d_prime, eval_d, exp_correspondence,
                     roots_in_disk, simplicity_at_one, smallest_roots, stability_verdict)
from .dde import (DiscretizedOperator, HistorySegment, SimulationResult, cross_check, distance_to_orbit,
                  linearized_step_operator, oracle_spectrum, simulate_controlled)
from .floquet import (HypothesisReport, TwistedMonodromy, check_hypotheses, eigen_all, twisted_monodromy,
                      verify_power_identity)
from .flow import (DiscreteWave, IntegrationError, ShootingError, Trajectory, VectorField,
                   find_discrete_wave, fundamental_solution, integrate, variational_flow)
from .hayes import (GainInterval, Region, curve_C, emit_region_chart, gain_interval_combined,
                    gain_interval_single, gain_path, in_stability_region)
from .symmetry import GroupElement, SpatioTemporalSymmetry, pattern_residual
from .systems import get_system, register_system

__version__ = "0.1.0"

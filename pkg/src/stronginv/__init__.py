"""Numerical tools for strong invariance of differential inclusions.

Set-valued dynamics and their Hamiltonians, proximal normals and
subgradients, time mollification of feedbacks, the polygonal Euler
construction, invariance certificates, and worked scenarios.
"""

from . import errors
from .errors import *  # noqa: F401,F403
from .euler import (EulerConfig, Trajectory, build_polygonal_arc, default_schedule, hull_sample,
                    integrate_feedback, partition, refine_many, refine_trajectory, select_velocity,
                    solve_feedback, step_size)
from .export import (csv_to_trajectory, emit_plot_data, read_trajectory, trajectory_to_csv,
                     write_json, write_trajectory)
from .invariance import (BoundaryRegion, Certificate, GridRegion, PointsRegion, SublevelRegion,
                         certify_hamiltonian, certify_normal_cone, certify_remark_variant,
                         classify_escape, empirical_strong_invariance, equivalence_suite)
from .mollifier import BumpKernel, Feedback, bump, bump_constant, kernel, mollified_feedback, mollify
from .multifunction import (Multifunction, cone_contains, cone_distance, constant, eval_set,
                            growth_estimate, hamiltonian, hamiltonian_over_set)
from .nonsmooth import (ClosedBall, ClosedBox, FiniteUnion, HalfSpace, LscFunction, ProxWitness,
                        Singleton, Sublevel, clarke_tangent_contains, complement_of_open_box,
                        distance, indicator, lsc_function, mvi_search, proximal_normal_generators,
                        proximal_subgradients, quadratic, smooth_function, witness_holds)
from .scenarios import REGISTRY, Scenario, get_scenario
from .sets import Ball, Box, FinitePoints, HullOfPoints, Segment, Union, interval, point

__version__ = "0.1.0"

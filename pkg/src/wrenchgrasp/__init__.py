"""Wrench-aware grasp selection for desk-scale tool use.

Analytic impulse/torque/slip costs conditioned on a task trajectory, a
learned surrogate for fast candidate scoring, and an impulse-based rollout
simulator that validates the torque -> slip -> failure chain.
"""

__version__ = "0.1.0"

from .cost import CostBreakdown, CostWeights, analytic_cost
from .grasp import GraspCandidate, geometry_score, sample_antipodal, select_grasp
from .motion import ContactParams, Trajectory, contact_events, synth_trajectory
from .scenario import Scenario, load_default_scenario, load_scenario
from .spatial import (Pose, PointCloud, Primitive, RigidBodyModel, ToolModel,
                      compose_inertia, sample_surface, transform_pose)
from .dynsim import SimConfig, SimMetrics, rollout
from .surrogate import MlpModel, featurize, forward, predict_cost, train
from .wrench import (ContactState, WrenchReport, aggregate_contacts,
                     contact_force, contact_velocity, decompose_force,
                     induced_torque, normal_impulse)

__all__ = [
    "CostBreakdown", "CostWeights", "analytic_cost",
    "GraspCandidate", "geometry_score", "sample_antipodal", "select_grasp",
    "ContactParams", "Trajectory", "contact_events", "synth_trajectory",
    "Scenario", "load_default_scenario", "load_scenario",
    "Pose", "PointCloud", "Primitive", "RigidBodyModel", "ToolModel",
    "compose_inertia", "sample_surface", "transform_pose",
    "SimConfig", "SimMetrics", "rollout",
    "MlpModel", "featurize", "forward", "predict_cost", "train",
    "ContactState", "WrenchReport", "aggregate_contacts", "contact_force",
    "contact_velocity", "decompose_force", "induced_torque", "normal_impulse",
]

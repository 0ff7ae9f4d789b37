"""Torque, slip and alignment penalties and their trajectory-conditioned total.

The per-event chain is evaluated in the tool body frame, where the grasp
geometry and inertia tensor are constant and every quantity transforms
covariantly; the resulting penalties are invariant under rigid transforms
of the whole scene by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .motion import (ContactParams, Trajectory, closest_approach_index,
                     contact_events, single_target)
from .spatial import UNIT_TOL, RigidBodyModel
from .wrench import (DEFAULT_IMPULSE_DT, ContactState, contact_force,
                     decompose_force, induced_torque, normal_impulse)

REGIME_QUASI_STATIC = "quasi_static"
REGIME_DYNAMIC = "dynamic"
REGIME_CLUSTERED = "clustered"

# inertial-dominance ratio separating dynamic from quasi-static
DOMINANCE_THETA = 1.0


@dataclass(frozen=True)
class CostWeights:
    """Weights of the three penalty terms (per N*m, per N, per rad)."""

    w_tau: float = 1.0
    w_s: float = 1.0
    w_alpha: float = 1.0

    def __post_init__(self):
        if self.w_tau < 0 or self.w_s < 0 or self.w_alpha < 0:
            raise InvalidParameterError("cost weights must be non-negative")
        if self.w_tau == 0 and self.w_s == 0 and self.w_alpha == 0:
            raise InvalidParameterError("at least one cost weight must be positive")


@dataclass(frozen=True)
class CostBreakdown:
    """Penalty components (N*m, N, rad) and their weighted total."""

    c_tau: float
    c_slip: float
    c_align: float
    total: float

    @staticmethod
    def of(c_tau: float, c_slip: float, c_align: float, w: CostWeights) -> "CostBreakdown":
        return CostBreakdown(c_tau, c_slip, c_align,
                             total_cost((c_tau, c_slip, c_align), w))


def torque_penalty(tau: np.ndarray, closure_axis: np.ndarray) -> float:
    """Norm of the torque component orthogonal to the jaw closure axis."""
    a = np.asarray(closure_axis, dtype=float)
    if abs(np.linalg.norm(a) - 1.0) > UNIT_TOL:
        raise InvalidParameterError("closure axis must be unit length")
    tau = np.asarray(tau, dtype=float)
    return float(np.linalg.norm(tau - float(tau @ a) * a))


def slip_penalty(F: np.ndarray, n_finger: np.ndarray, mu: float) -> float:
    """Tangential load in excess of the friction cone: max(0, |F_t| - mu |F_n|)."""
    if mu < 0.0:
        raise InvalidParameterError("friction coefficient must be non-negative")
    f_n, f_t = decompose_force(F, n_finger)
    return max(0.0, float(np.linalg.norm(f_t)) - mu * float(np.linalg.norm(f_n)))


def alignment_penalty(n_finger: np.ndarray, n: np.ndarray) -> float:
    """Angle between the finger pad normal and the interaction normal."""
    for v in (n_finger, n):
        if abs(np.linalg.norm(np.asarray(v, dtype=float)) - 1.0) > UNIT_TOL:
            raise InvalidParameterError("alignment inputs must be unit vectors")
    c = float(np.asarray(n_finger, dtype=float) @ np.asarray(n, dtype=float))
    return math.acos(min(1.0, max(-1.0, c)))


def total_cost(components, w: CostWeights) -> float:
    c_tau, c_slip, c_align = components
    return w.w_tau * c_tau + w.w_s * c_slip + w.w_alpha * c_align


def event_wrench_chain(grasp, body: RigidBodyModel, omega: ContactParams,
                       rotation: np.ndarray, v_world: np.ndarray,
                       w_world: np.ndarray, target_n: np.ndarray,
                       impulse_dt: float, target_mass: float = math.inf):
    """Impulse, force and wrist torque of one event, in the tool frame.

    rotation is the tool's world orientation at the event; v_world is the
    velocity of the tool frame origin. Returns (J, F, tau, n_tool).
    """
    w_t = rotation.T @ w_world
    v_com = rotation.T @ v_world + np.cross(w_t, body.com)
    n_t = rotation.T @ target_n
    r_com = omega.c_tool - body.com
    cs = ContactState(r=r_com, n=n_t, v=v_com, omega=w_t, dt=impulse_dt)
    j, _ = normal_impulse(body, cs, other_mass=target_mass)
    F = contact_force(j, cs)
    r_grasp = omega.c_tool - grasp.pose.translation
    tau = induced_torque(r_grasp, F)
    return j, F, tau, n_t


def analytic_cost(grasp, traj: Trajectory, omega: ContactParams,
                  body: RigidBodyModel, weights: CostWeights,
                  targets=None, impulse_dt: float = DEFAULT_IMPULSE_DT) -> CostBreakdown:
    """Trajectory-conditioned cost of one grasp candidate.

    Each predicted contact event is pushed through the impulse chain; the
    torque and slip penalties aggregate as per-component peaks over
    events, and alignment is taken at the peak-impulse event. With no
    contact the cost reduces to alignment at the closest-approach pose.
    """
    events = contact_events(traj, omega, targets=targets)
    if not events:
        idx = closest_approach_index(traj, omega,
                                     (targets or single_target(omega))[0])
        n_t = traj.rotations[idx].T @ omega.n
        c_align = alignment_penalty(grasp.finger_normal, n_t)
        return CostBreakdown.of(0.0, 0.0, c_align, weights)

    c_tau = c_slip = 0.0
    best_j = -1.0
    c_align = 0.0
    for ev in events:
        R = traj.rotations[ev.sample_index]
        j, F, tau, n_t = event_wrench_chain(
            grasp, body, omega, R, ev.v, ev.omega, ev.target.n,
            impulse_dt, ev.target.mass)
        c_tau = max(c_tau, torque_penalty(tau, grasp.closure_axis))
        c_slip = max(c_slip, slip_penalty(F, grasp.finger_normal, body.friction))
        if j > best_j:
            best_j = j
            c_align = alignment_penalty(grasp.finger_normal, n_t)
    return CostBreakdown.of(c_tau, c_slip, c_align, weights)


def classify_regime(body: RigidBodyModel, traj: Trajectory,
                    grasp_reaction: float, contact_count: int,
                    theta: float = DOMINANCE_THETA) -> str:
    """Label the interaction by inertial dominance and contact multiplicity."""
    if not grasp_reaction > 0.0:
        raise InvalidParameterError("grasp reaction force must be positive")
    if contact_count > 1:
        return REGIME_CLUSTERED
    dt = np.diff(traj.times)[:, None]
    acc = np.diff(traj.velocities, axis=0) / dt
    peak = float(np.max(np.linalg.norm(acc, axis=1))) * body.mass if len(acc) else 0.0
    return REGIME_DYNAMIC if peak >= theta * grasp_reaction else REGIME_QUASI_STATIC

"""Impulse-based rollout: gripper follows the trajectory, the tool may slip.

The arm is position-controlled, so the gripper motion is kinematic and
authoritative; the only dynamic degree of freedom is the tool relative to
the gripper. At each step the simulator computes the wrench the grasp must
supply (inertial + gravity + impact reactions) and feeds it to a two-pad
Coulomb holding model. Tangential demand at a pad combines the direct
tangential force with the couple that reacts torque orthogonal to the
closure axis; torque about the closure axis is resisted by torsional
friction over the finite contact patch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError, SimulationDivergedError
from .motion import ContactParams, Trajectory, contact_events, single_target
from .spatial import (RigidBodyModel, ToolModel, rotation_about_axis,
                      rotation_exp, rotation_log)
from .wrench import (DEFAULT_IMPULSE_DT, ContactState, WrenchReport,
                     contact_velocity, decompose_force, normal_impulse)

GRAVITY = np.array([0.0, 0.0, -9.81])


def _cross3(a, b):
    # np.cross has high per-call overhead for single 3-vectors
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]])


@dataclass(frozen=True)
class SimConfig:
    """Rollout configuration: stepping, holding model, failure thresholds."""

    dt_sim: float = 0.001
    mu_g: float = 0.6
    clamp_force: float = 40.0
    a_patch: float = 0.01
    slip_limit: float = 0.005
    rotation_limit: float = math.radians(10.0)
    seed: int = 0
    impulse_dt: float = DEFAULT_IMPULSE_DT
    # mobility of the saturated contact: slip rate per newton of excess
    slip_mobility: float = 0.0015
    rot_mobility: float = 0.8
    gravity: bool = True

    def __post_init__(self):
        if not self.dt_sim > 0.0:
            raise InvalidParameterError("dt_sim must be positive")
        if self.mu_g < 0.0:
            raise InvalidParameterError("grasp friction must be non-negative")
        if not self.a_patch > 0.0:
            raise InvalidParameterError("patch radius must be positive")
        if not self.clamp_force > 0.0:
            raise InvalidParameterError("clamp force must be positive")


@dataclass(frozen=True, eq=False)
class SlipState:
    """Tool-in-gripper drift: tool-frame offset plus spin about the closure axis."""

    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angle: float = 0.0
    s_total: float = 0.0
    alpha_total: float = 0.0
    # per-step context, maintained by the rollout
    closure_axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    jaw_width: float = 0.03
    tool_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))


@dataclass
class SimMetrics:
    """Peak loads, accumulated drift, and the per-step time series."""

    tau_max: float
    s_max: float
    alpha_max: float
    failed: bool
    times: np.ndarray
    wrist_force: np.ndarray
    wrist_torque: np.ndarray
    tau_series: np.ndarray
    slip_series: np.ndarray
    align_series: np.ndarray
    events: list

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "tau_max_nm": self.tau_max,
            "s_max_m": self.s_max,
            "alpha_max_rad": self.alpha_max,
            "failed": self.failed,
            "events": self.events,
            "series": {
                "t_s": self.times.tolist(),
                "wrist_force_n": self.wrist_force.tolist(),
                "wrist_torque_nm": self.wrist_torque.tolist(),
                "tau_nm": self.tau_series.tolist(),
                "slip_m": self.slip_series.tolist(),
                "align_rad": self.align_series.tolist(),
            },
        }


def _pad_demands(f_t: np.ndarray, tau_perp: np.ndarray, axis: np.ndarray,
                 jaw_width: float):
    """Tangential force demand at each finger pad.

    Pads sit at +-jaw_width/2 along the closure axis; the orthogonal
    torque is reacted by a tangential couple, so pad i carries
    F_t/2 +- (tau_perp x axis)/jaw_width.
    """
    couple = _cross3(tau_perp, axis) / max(jaw_width, 1e-6)
    return f_t / 2.0 + couple, f_t / 2.0 - couple


def slip_update(state: SlipState, grasp_load: WrenchReport, cfg: SimConfig,
                dt: float) -> SlipState:
    """Advance the Coulomb holding model by one step.

    Translational slip accrues at slip_mobility * (tangential demand minus
    mu_g * clamp_force) when positive, in the direction of the most loaded
    pad; rotational slip about the closure axis accrues at rot_mobility *
    (|tau_axis| - mu_g * clamp_force * a_patch) when positive. Loads inside
    both limits leave the state unchanged.
    """
    a = state.closure_axis
    tau_axis = float(grasp_load.torque @ a)
    tau_perp = grasp_load.torque - tau_axis * a
    pad1, pad2 = _pad_demands(grasp_load.f_tangent, tau_perp, a, state.jaw_width)
    n1, n2 = math.sqrt(float(pad1 @ pad1)), math.sqrt(float(pad2 @ pad2))
    demand = n1 + n2
    excess_t = max(0.0, demand - cfg.mu_g * cfg.clamp_force)
    excess_r = max(0.0, abs(tau_axis) - cfg.mu_g * cfg.clamp_force * cfg.a_patch)
    if excess_t == 0.0 and excess_r == 0.0:
        return state
    ds = cfg.slip_mobility * excess_t * dt
    dbeta = cfg.rot_mobility * excess_r * dt * (-math.copysign(1.0, tau_axis)
                                                if tau_axis != 0.0 else 0.0)
    offset = state.offset
    if ds > 0.0:
        worst, worst_n = (pad1, n1) if n1 >= n2 else (pad2, n2)
        # tool slides opposite the unresisted pull, expressed in the tool frame
        dir_world = -worst / max(worst_n, 1e-12)
        offset = state.offset + ds * (state.tool_rotation.T @ dir_world)
    return replace(state, offset=offset, angle=state.angle + dbeta,
                   s_total=state.s_total + ds,
                   alpha_total=state.alpha_total + abs(dbeta))


def failure_classify(metrics: SimMetrics, cfg: SimConfig) -> bool:
    """Strict threshold test on accumulated slip and rotation."""
    return metrics.s_max > cfg.slip_limit or metrics.alpha_max > cfg.rotation_limit


def _restitution_residual(body: RigidBodyModel, cs: ContactState, j: float) -> float:
    """|post-impulse normal velocity + e * pre| after applying J n at r."""
    v_pre = contact_velocity(cs.v, cs.omega, cs.r)
    dv = (j / body.mass) * cs.n
    dw = np.linalg.solve(body.inertia, np.cross(cs.r, j * cs.n))
    v_post = contact_velocity(cs.v + dv, cs.omega + dw, cs.r)
    return abs(float(v_post @ cs.n) + body.restitution * float(v_pre @ cs.n))


def _slip_transform(g, state: SlipState):
    """Tool-frame correction (R, t) implied by the slip state."""
    R = rotation_about_axis(g.closure_axis, state.angle)
    t = g.pose.translation - R @ g.pose.translation + state.offset
    return R, t


def _resample(traj: Trajectory, times: np.ndarray):
    """Vectorized nominal kinematics on the simulator grid."""
    idx = np.clip(np.searchsorted(traj.times, times, side="right") - 1,
                  0, len(traj.times) - 2)
    t0 = traj.times[idx]
    t1 = traj.times[idx + 1]
    a = ((times - t0) / (t1 - t0))[:, None]
    pos = (1 - a) * traj.positions[idx] + a * traj.positions[idx + 1]
    vel = (1 - a) * traj.velocities[idx] + a * traj.velocities[idx + 1]
    ang = (1 - a) * traj.angular_velocities[idx] + a * traj.angular_velocities[idx + 1]
    logs = {}
    rot = np.empty((len(times), 3, 3))
    for k, (i, ak) in enumerate(zip(idx, a[:, 0])):
        if ak == 0.0:
            rot[k] = traj.rotations[i]
            continue
        if i not in logs:
            logs[i] = rotation_log(traj.rotations[i].T @ traj.rotations[i + 1])
        rot[k] = traj.rotations[i] @ rotation_exp(ak * logs[i])
    acc = np.gradient(vel, times, axis=0)
    ang_acc = np.gradient(ang, times, axis=0)
    return rot, pos, vel, ang, acc, ang_acc


def rollout(tool: ToolModel, body: RigidBodyModel, g, traj: Trajectory,
            omega: ContactParams, cfg: SimConfig, targets=None) -> SimMetrics:
    """Run one grasp through the trajectory and record wrist-load metrics.

    Impact impulses are computed at the designed events from the nominal
    motion and spread over cfg.impulse_dt as contact forces, so the peak
    wrist torque of a non-slipping rollout reproduces the analytic chain.
    """
    targets = list(targets) if targets is not None else single_target(omega)
    events = contact_events(traj, omega, tool, g, targets=targets)
    event_records = []
    event_forces = []  # (t_start, t_end, force_world, contact_point_world)
    for ev in events:
        R = traj.rotations[ev.sample_index]
        w_t = R.T @ ev.omega
        v_com = R.T @ ev.v + np.cross(w_t, body.com)
        cs = ContactState(r=omega.c_tool - body.com, n=R.T @ ev.target.n,
                          v=v_com, omega=w_t, dt=cfg.impulse_dt)
        j, no_impact = normal_impulse(body, cs, other_mass=ev.target.mass)
        if no_impact:
            continue
        residual = _restitution_residual(body, cs, j) if ev.target.mass == math.inf else None
        event_records.append({"t_s": ev.t, "impulse_ns": j,
                              "approach_mps": ev.approach_speed,
                              "restitution_residual": residual})
        event_forces.append((ev.t, ev.t + cfg.impulse_dt,
                             (j / cfg.impulse_dt) * ev.target.n, ev.target.c_obj))

    n_steps = int(round(traj.horizon / cfg.dt_sim)) + 1
    times = np.linspace(0.0, traj.horizon, n_steps)
    rot_n, pos_n, vel_n, ang_n, acc_n, ang_acc_n = _resample(traj, times)
    state = SlipState(jaw_width=g.jaw_width)
    grav = GRAVITY if cfg.gravity else np.zeros(3)

    wrist_force = np.zeros((n_steps, 3))
    wrist_torque = np.zeros((n_steps, 3))
    tau_series = np.zeros(n_steps)
    slip_series = np.zeros(n_steps)
    align_series = np.zeros(n_steps)

    slip_angle = None
    R_d = np.eye(3)
    t_d = np.zeros(3)
    m_kg = body.mass
    for k, t in enumerate(times):
        v, w = vel_n[k], ang_n[k]
        acc, ang_acc = acc_n[k], ang_acc_n[k]
        # actual tool pose = nominal composed with the slip correction
        if state.angle != slip_angle:
            slip_angle = state.angle
            R_d, _ = _slip_transform(g, state)
        t_d = g.pose.translation - R_d @ g.pose.translation + state.offset
        R_w = rot_n[k] @ R_d
        p_w = rot_n[k] @ t_d + pos_n[k]
        com_w = R_w @ body.com + p_w
        grasp_w = R_w @ g.pose.translation + p_w
        I_w = R_w @ body.inertia @ R_w.T

        F_ext = np.zeros(3)
        tau_ext_about_com = np.zeros(3)
        j_active = 0.0
        for (t0, t1, f, c_pt) in event_forces:
            if t0 <= t < t1:
                F_ext = F_ext + f
                tau_ext_about_com = tau_ext_about_com + _cross3(c_pt - com_w, f)
                j_active += math.sqrt(float(f @ f)) * cfg.impulse_dt

        F_g = m_kg * acc - m_kg * grav - F_ext
        tau_g = (I_w @ ang_acc + _cross3(w, I_w @ w)
                 - _cross3(grasp_w - com_w, F_g) - tau_ext_about_com)
        if not (math.isfinite(F_g @ F_g) and math.isfinite(tau_g @ tau_g)):
            raise SimulationDivergedError(f"non-finite grasp load at t={t:.4f}")

        n_f_w = R_w @ g.finger_normal
        a_w = R_w @ g.closure_axis
        f_n = float(F_g @ n_f_w) * n_f_w
        f_t = F_g - f_n
        load = WrenchReport(impulse=j_active, force=F_g, torque=tau_g,
                            f_normal=f_n, f_tangent=f_t)
        state = replace(state, closure_axis=a_w, tool_rotation=R_w)
        state = slip_update(state, load, cfg, cfg.dt_sim)

        wrist_force[k] = F_g
        wrist_torque[k] = tau_g
        tau_series[k] = math.sqrt(float(tau_g @ tau_g))
        slip_series[k] = state.s_total
        align_series[k] = state.alpha_total

    metrics = SimMetrics(
        tau_max=float(tau_series.max()), s_max=float(state.s_total),
        alpha_max=float(state.alpha_total), failed=False,
        times=times, wrist_force=wrist_force, wrist_torque=wrist_torque,
        tau_series=tau_series, slip_series=slip_series,
        align_series=align_series, events=event_records)
    metrics.failed = failure_classify(metrics, cfg)
    return metrics

"""Parametric short-horizon trajectories and contact-event prediction.

A Trajectory stores the rigid motion of the held tool's body frame. The
end-effector path for a specific grasp differs from it by the constant
grasp offset, so twists and contact timing are shared by every candidate;
this is what lets one trajectory serve a whole candidate set under the
fixed-contact evaluation protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, SynthesisError
from .spatial import Pose, ToolModel, rotation_about_axis, rotation_exp, rotation_log, unit

DEFAULT_HORIZON = 1.0   # s
DEFAULT_SAMPLES = 201   # 5 ms spacing over 1 s

TRAJECTORY_KINDS = ("hammer", "sweep", "knock", "reach")


@dataclass(frozen=True, eq=False)
class ContactParams:
    """Grounded interaction geometry: where the tool meets the object.

    c_tool is on the tool surface in the tool body frame; c_obj, n, d are
    world-frame. n points from the object toward the tool, so an
    approaching contact has negative normal velocity; d is the interaction
    (motion) direction.
    """

    c_tool: np.ndarray
    c_obj: np.ndarray
    n: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        for name in ("c_tool", "c_obj", "n", "d"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float).reshape(3))
        for name in ("n", "d"):
            v = getattr(self, name)
            if abs(np.linalg.norm(v) - 1.0) > 1e-6:
                raise InvalidInputError(f"contact parameter {name} must be unit length")

    def to_dict(self) -> dict:
        return {"c_tool_m": self.c_tool.tolist(), "c_obj_m": self.c_obj.tolist(),
                "n": self.n.tolist(), "d": self.d.tolist()}


@dataclass(frozen=True, eq=False)
class ContactTarget:
    """One impact site: world point, normal, and the struck object's mass."""

    c_obj: np.ndarray
    n: np.ndarray
    mass: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "c_obj", np.asarray(self.c_obj, dtype=float).reshape(3))
        object.__setattr__(self, "n", np.asarray(self.n, dtype=float).reshape(3))


def single_target(omega: ContactParams) -> list:
    return [ContactTarget(omega.c_obj, omega.n)]


def sweep_targets(omega: ContactParams, count: int, spacing: float,
                  masses=None) -> list:
    """Impact sites laid out along the sweep direction from c_obj."""
    if count < 1:
        raise InvalidInputError("sweep needs at least one target")
    masses = list(masses) if masses is not None else [math.inf] * count
    if len(masses) != count:
        raise InvalidInputError("sweep masses must match target count")
    return [ContactTarget(omega.c_obj + i * spacing * omega.d, omega.n, masses[i])
            for i in range(count)]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-sampled rigid motion: pose plus twist per sample.

    v is the velocity of the frame origin, omega the angular velocity,
    both world-frame. Samples are strictly increasing in [0, horizon].
    """

    times: np.ndarray
    rotations: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    angular_velocities: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "rotations", np.asarray(self.rotations, dtype=float))
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "velocities", np.asarray(self.velocities, dtype=float))
        object.__setattr__(self, "angular_velocities",
                           np.asarray(self.angular_velocities, dtype=float))
        if len(t) < 2:
            raise InvalidInputError("trajectory needs at least two samples")
        if np.any(np.diff(t) <= 0.0) or t[0] < 0.0 or t[-1] > self.horizon + 1e-12:
            raise InvalidInputError("sample times must strictly increase within [0, horizon]")

    def __len__(self):
        return len(self.times)

    def pose(self, i: int) -> Pose:
        return Pose(self.rotations[i], self.positions[i])

    def at(self, t: float):
        """Interpolated (pose, v, omega) at time t (linear + geodesic)."""
        t = min(max(t, self.times[0]), self.times[-1])
        i = int(np.searchsorted(self.times, t, side="right") - 1)
        i = min(i, len(self.times) - 2)
        t0, t1 = self.times[i], self.times[i + 1]
        a = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        p = (1 - a) * self.positions[i] + a * self.positions[i + 1]
        dR = self.rotations[i].T @ self.rotations[i + 1]
        R = self.rotations[i] @ rotation_exp(a * rotation_log(dR))
        v = (1 - a) * self.velocities[i] + a * self.velocities[i + 1]
        w = (1 - a) * self.angular_velocities[i] + a * self.angular_velocities[i + 1]
        return Pose(R, p), v, w

    def validate_twists(self, rel_tol: float = 0.05):
        """Check stored twists against central differences of the poses."""
        t, p = self.times, self.positions
        scale = max(float(np.max(np.linalg.norm(self.velocities, axis=1))), 1e-9)
        wscale = max(float(np.max(np.linalg.norm(self.angular_velocities, axis=1))), 1e-9)
        for i in range(1, len(t) - 1):
            dt = t[i + 1] - t[i - 1]
            v_fd = (p[i + 1] - p[i - 1]) / dt
            if np.linalg.norm(v_fd - self.velocities[i]) > rel_tol * scale + 1e-9:
                raise InvalidInputError(f"linear twist inconsistent at sample {i}")
            w_fd = rotation_log(self.rotations[i - 1].T @ self.rotations[i + 1]) / dt
            w_fd = self.rotations[i] @ w_fd
            if np.linalg.norm(w_fd - self.angular_velocities[i]) > rel_tol * wscale + 1e-9:
                raise InvalidInputError(f"angular twist inconsistent at sample {i}")

    def to_dict(self) -> dict:
        return {
            "horizon_s": float(self.horizon),
            "times_s": self.times.tolist(),
            "rotations": self.rotations.tolist(),
            "positions_m": self.positions.tolist(),
            "velocities_mps": self.velocities.tolist(),
            "angular_velocities_radps": self.angular_velocities.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "Trajectory":
        return Trajectory(
            times=np.array(d["times_s"], dtype=float),
            rotations=np.array(d["rotations"], dtype=float),
            positions=np.array(d["positions_m"], dtype=float),
            velocities=np.array(d["velocities_mps"], dtype=float),
            angular_velocities=np.array(d["angular_velocities_radps"], dtype=float),
            horizon=float(d["horizon_s"]),
        )


@dataclass(frozen=True, eq=False)
class ContactEvent:
    """One predicted impact: trajectory twist and approach speed at the hit."""

    t: float
    v: np.ndarray
    omega: np.ndarray
    approach_speed: float
    sample_index: int
    target: ContactTarget

    def __post_init__(self):
        if not self.approach_speed > 0.0:
            raise InvalidInputError("contact event requires positive approach speed")


def _time_grid(horizon: float, samples: int, t_contact: float) -> np.ndarray:
    """Uniform grid with the nearest sample snapped onto the contact time."""
    t = np.linspace(0.0, horizon, samples)
    i = int(np.argmin(np.abs(t - t_contact)))
    if 0 < i < samples - 1:
        t[i] = t_contact
    return t


def _contact_frame(omega: ContactParams, params: dict):
    """Tool pose at the designed contact instant."""
    R_c = np.array(params.get("contact_rotation", np.eye(3)), dtype=float)
    p_c = omega.c_obj - R_c @ omega.c_tool
    return Pose(R_c, p_c)


def synth_trajectory(kind: str, params: dict, omega: ContactParams) -> Trajectory:
    """Build one of the four parametric interaction profiles.

    hammer: arc swing peaking at v_peak along -n at the contact instant;
    knock:  short straight tap along -n;
    reach:  slow constant-rate push along -n with the full tool extended;
    sweep:  constant lateral pass along d crossing the target row.

    Every profile passes the designed tool contact point through the
    first target exactly at t_contact with the designed speed.
    """
    if kind not in TRAJECTORY_KINDS:
        raise SynthesisError(f"unknown trajectory kind {kind!r}")
    params = dict(params or {})
    horizon = float(params.get("horizon_s", DEFAULT_HORIZON))
    samples = int(params.get("samples", DEFAULT_SAMPLES))
    t_c = float(params.get("t_contact_s", horizon / 2.0))
    if not 0.0 < t_c < horizon:
        raise SynthesisError("contact time must fall inside the horizon")
    times = _time_grid(horizon, samples, t_c)
    X_c = _contact_frame(omega, params)
    n = omega.n

    if kind == "hammer":
        v_peak = float(params.get("v_peak_mps", 2.0))
        arm = float(params.get("arm_length_m", 0.35))
        if v_peak <= 0.0 or arm <= 0.0:
            raise SynthesisError("hammer needs positive v_peak and arm length")
        d_eff = omega.d - float(omega.d @ n) * n
        if np.linalg.norm(d_eff) < 1e-9:
            raise SynthesisError("hammer swing direction parallel to contact normal")
        d_eff = unit(d_eff)
        axis = np.cross(d_eff, n)
        pivot = omega.c_obj - arm * d_eff
        theta_amp = 2.0 * t_c * v_peak / (math.pi * arm)
        rot, pos, vel, ang = [], [], [], []
        for t in times:
            phase = math.pi * t / (2.0 * t_c)
            theta = theta_amp * math.cos(phase)
            dtheta = -theta_amp * math.pi / (2.0 * t_c) * math.sin(phase)
            A = rotation_about_axis(axis, theta)
            R = A @ X_c.rotation
            p = pivot + A @ (X_c.translation - pivot)
            w = dtheta * axis
            rot.append(R)
            pos.append(p)
            vel.append(np.cross(w, p - pivot))
            ang.append(w)
        return Trajectory(times, np.array(rot), np.array(pos), np.array(vel),
                          np.array(ang), horizon)

    if kind in ("knock", "reach"):
        key = "v_peak_mps" if kind == "knock" else "v_push_mps"
        default = 0.8 if kind == "knock" else 0.05
        speed = float(params.get(key, default))
        if speed <= 0.0:
            raise SynthesisError(f"{kind} needs a positive speed")
        if kind == "knock":
            # smooth tap: standoff h along +n, cosine blend through contact
            h = 2.0 * speed * t_c / math.pi
            offsets = [h * math.cos(math.pi * t / (2.0 * t_c)) for t in times]
            rates = [-h * math.pi / (2.0 * t_c) * math.sin(math.pi * t / (2.0 * t_c))
                     for t in times]
        else:
            offsets = [speed * (t_c - t) for t in times]
            rates = [-speed for _ in times]
        rot = np.array([X_c.rotation] * len(times))
        pos = np.array([X_c.translation + o * n for o in offsets])
        vel = np.array([r * n for r in rates])
        ang = np.zeros((len(times), 3))
        return Trajectory(times, rot, pos, vel, ang, horizon)

    # sweep: constant lateral velocity along d through the target row
    v_sweep = float(params.get("v_sweep_mps", 0.6))
    if v_sweep <= 0.0:
        raise SynthesisError("sweep needs a positive speed")
    rot = np.array([X_c.rotation] * len(times))
    pos = np.array([X_c.translation + (t - t_c) * v_sweep * omega.d for t in times])
    vel = np.array([v_sweep * omega.d] * len(times))
    ang = np.zeros((len(times), 3))
    return Trajectory(times, rot, pos, vel, ang, horizon)


def contact_events(traj: Trajectory, omega: ContactParams, tool: ToolModel = None,
                   grasp=None, targets=None) -> list:
    """Predict impacts: samples where the tool contact point crosses a
    target plane while still approaching.

    Events are properties of the tool motion, so the grasp argument is
    accepted for interface symmetry but never changes the result; tool is
    likewise only geometric context. Each crossing is resolved at the
    sample nearest the plane.
    """
    targets = list(targets) if targets is not None else single_target(omega)
    pts = traj.positions + np.einsum("nij,j->ni", traj.rotations, omega.c_tool)
    events = []
    for target in targets:
        s = (pts - target.c_obj) @ target.n
        for i in range(len(s) - 1):
            if s[i] > 0.0 >= s[i + 1]:
                idx = i if abs(s[i]) < abs(s[i + 1]) else i + 1
                v_cp = contact_point_velocity(traj, idx, omega)
                approach = -float(v_cp @ target.n)
                if approach > 0.0:
                    events.append(ContactEvent(
                        t=float(traj.times[idx]), v=traj.velocities[idx].copy(),
                        omega=traj.angular_velocities[idx].copy(),
                        approach_speed=approach, sample_index=idx, target=target))
    events.sort(key=lambda e: e.t)
    return events


def contact_point_velocity(traj: Trajectory, i: int, omega: ContactParams) -> np.ndarray:
    """World velocity of the designated tool contact point at sample i."""
    lever = traj.rotations[i] @ omega.c_tool
    return traj.velocities[i] + np.cross(traj.angular_velocities[i], lever)


def closest_approach_index(traj: Trajectory, omega: ContactParams,
                           target: ContactTarget = None) -> int:
    """Sample where the tool contact point is nearest the target plane."""
    target = target or single_target(omega)[0]
    pts = traj.positions + np.einsum("nij,j->ni", traj.rotations, omega.c_tool)
    return int(np.argmin(np.abs((pts - target.c_obj) @ target.n)))


def scale_trajectory(traj: Trajectory, s: float) -> Trajectory:
    """Scale motion amplitude (and hence speed) by s about the start pose.

    Positions contract toward the initial pose and rotations follow the
    geodesic toward the initial orientation; twists scale linearly. Exact
    for the fixed-axis profiles produced by synth_trajectory. Below some
    s the scaled path no longer reaches the contact, which is the
    quasi-static limit.
    """
    if s < 0.0:
        raise InvalidInputError("scale must be non-negative")
    R0 = traj.rotations[0]
    p0 = traj.positions[0]
    # accumulate per-interval logs so swings beyond pi do not wrap
    psi = np.zeros(3)
    rot = [R0.copy()]
    for i in range(1, len(traj)):
        psi = psi + rotation_log(traj.rotations[i - 1].T @ traj.rotations[i])
        rot.append(R0 @ rotation_exp(s * psi))
    pos = p0 + s * (traj.positions - p0)
    return Trajectory(traj.times, np.array(rot), pos, s * traj.velocities,
                      s * traj.angular_velocities, traj.horizon)

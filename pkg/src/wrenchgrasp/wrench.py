"""Impact wrench chain: normal impulse, contact force, induced torque.

All operations expect their vector arguments in one common frame, with the
body inertia expressed in that same frame about the COM. The toolkit
evaluates the chain in the tool body frame, where the inertia tensor is
constant; the scalar impulse is frame-invariant either way.

Two lever arms are carried explicitly and must not be confused:
  * the COM lever (contact minus COM) enters the impulse denominator,
  * the grasp lever (contact minus grasp origin) enters the wrist torque.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidParameterError
from .spatial import UNIT_TOL, RigidBodyModel

DEFAULT_IMPULSE_DT = 0.005  # s, rigid-impact force-averaging window


@dataclass(frozen=True, eq=False)
class ContactState:
    """Kinematic state of one impending contact.

    r is the COM lever (contact point minus COM); v and omega are the
    body twist with v taken at the COM, so the contact-point velocity is
    v + omega x r.
    """

    r: np.ndarray
    n: np.ndarray
    v: np.ndarray
    omega: np.ndarray
    dt: float = DEFAULT_IMPULSE_DT

    def __post_init__(self):
        for name in ("r", "n", "v", "omega"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float).reshape(3))
        if abs(np.linalg.norm(self.n) - 1.0) > UNIT_TOL:
            raise InvalidParameterError("contact normal must be unit length")
        if not self.dt > 0.0:
            raise InvalidParameterError(f"impulse duration must be positive, got {self.dt}")


@dataclass(frozen=True, eq=False)
class WrenchReport:
    """Impulse, force and torque of one contact, split at the gripper pads."""

    impulse: float
    force: np.ndarray
    torque: np.ndarray
    f_normal: np.ndarray
    f_tangent: np.ndarray

    def __post_init__(self):
        for name in ("force", "torque", "f_normal", "f_tangent"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float).reshape(3))

    @staticmethod
    def zero() -> "WrenchReport":
        z = np.zeros(3)
        return WrenchReport(0.0, z, z.copy(), z.copy(), z.copy())


class ImpulseResult(NamedTuple):
    j: float
    no_impact: bool


def contact_velocity(v: np.ndarray, omega: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Velocity of a body point offset r from the twist reference point."""
    return np.asarray(v, dtype=float) + np.cross(omega, r)


def normal_impulse(body: RigidBodyModel, cs: ContactState,
                   other_mass: float = math.inf) -> ImpulseResult:
    """Normal impulse of a rigid impact at lever r with restitution e.

        J = -(1 + e) (v_c . n) / (1/m + n . [I^-1 (r x n) x r])

    Separating contacts (v_c . n >= 0) transfer nothing and come back with
    the no_impact flag set. ``other_mass`` adds a 1/m_other term to the
    denominator for impacts against a free point mass instead of an
    anchored environment (used for light swept objects); the default
    keeps the anchored form.
    """
    v_c = contact_velocity(cs.v, cs.omega, cs.r)
    vn = float(v_c @ cs.n)
    if vn >= 0.0:
        return ImpulseResult(0.0, True)
    rxn = np.cross(cs.r, cs.n)
    ang = float(cs.n @ np.cross(np.linalg.solve(body.inertia, rxn), cs.r))
    denom = 1.0 / body.mass + ang
    if other_mass != math.inf:
        if other_mass <= 0.0:
            raise InvalidParameterError("other_mass must be positive")
        denom += 1.0 / other_mass
    j = -(1.0 + body.restitution) * vn / denom
    return ImpulseResult(j, False)


def contact_force(j: float, cs: ContactState) -> np.ndarray:
    """Average contact force of impulse j spread over the window dt."""
    if not cs.dt > 0.0:
        raise InvalidParameterError("impulse duration must be positive")
    return (j / cs.dt) * cs.n


def induced_torque(r: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Torque r x F about the frame the lever r is measured from."""
    return np.cross(np.asarray(r, dtype=float), np.asarray(F, dtype=float))


def decompose_force(F: np.ndarray, n_finger: np.ndarray):
    """Split F into components along and across the finger pad normal."""
    n_finger = np.asarray(n_finger, dtype=float)
    if abs(np.linalg.norm(n_finger) - 1.0) > UNIT_TOL:
        raise InvalidParameterError("finger normal must be unit length")
    F = np.asarray(F, dtype=float)
    f_n = float(F @ n_finger) * n_finger
    return f_n, F - f_n


def make_report(j: float, F: np.ndarray, tau: np.ndarray,
                n_finger: np.ndarray) -> WrenchReport:
    f_n, f_t = decompose_force(F, n_finger)
    return WrenchReport(impulse=j, force=np.asarray(F, dtype=float),
                        torque=np.asarray(tau, dtype=float),
                        f_normal=f_n, f_tangent=f_t)


def aggregate_contacts(reports) -> WrenchReport:
    """Superpose simultaneous contact wrenches (same frame required)."""
    reports = list(reports)
    if not reports:
        return WrenchReport.zero()
    return WrenchReport(
        impulse=sum(r.impulse for r in reports),
        force=sum(r.force for r in reports),
        torque=sum(r.torque for r in reports),
        f_normal=sum(r.f_normal for r in reports),
        f_tangent=sum(r.f_tangent for r in reports),
    )

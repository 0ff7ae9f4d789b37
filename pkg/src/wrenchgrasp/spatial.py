"""Spatial algebra, parametric tool models, and surface sampling.

Conventions used throughout the toolkit:
  * vectors are numpy float64 arrays of shape (3,)
  * rotations are 3x3 orthonormal matrices with det +1
  * inertia tensors are expressed about the body COM in the body frame
  * units are SI (m, kg, s, N, N*m) unless a name says otherwise
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (InvalidInputError, InvalidModelError,
                     InvalidParameterError, InvalidTransformError)

ROTATION_TOL = 1e-9
UNIT_TOL = 1e-6

_SHAPE_NDIMS = {"box": 3, "cylinder": 2, "sphere": 1}


def vec(x, y, z) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        raise InvalidParameterError("cannot normalize a zero vector")
    return np.asarray(v, dtype=float) / n


def is_rotation(R: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    return (
        np.all(np.abs(R.T @ R - np.eye(3)) <= tol)
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation about a (not necessarily unit) axis."""
    a = unit(np.asarray(axis, dtype=float))
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Axis-angle vector of a rotation matrix (inverse of rotation_exp)."""
    tr = float(np.trace(R))
    c = min(1.0, max(-1.0, (tr - 1.0) / 2.0))
    angle = math.acos(c)
    if angle < 1e-12:
        return np.zeros(3)
    if angle > math.pi - 1e-6:
        # near pi: extract axis from R + I
        M = (R + np.eye(3)) / 2.0
        axis = unit(np.sqrt(np.maximum(np.diag(M), 0.0)))
        # fix signs from off-diagonal terms
        if M[0, 1] < 0:
            axis[1] = -axis[1]
        if M[0, 2] < 0:
            axis[2] = -axis[2]
        return angle * axis
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return angle / (2.0 * math.sin(angle)) * w


def rotation_exp(w: np.ndarray) -> np.ndarray:
    angle = float(np.linalg.norm(w))
    if angle < 1e-12:
        return np.eye(3)
    return rotation_about_axis(w / angle, angle)


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: x_world = rotation @ x_local + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if not is_rotation(R):
            raise InvalidTransformError("rotation is not orthonormal with det +1")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise InvalidTransformError("non-finite transform")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        RT = self.rotation.T
        return Pose(RT, -RT @ self.translation)

    def apply_point(self, p: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def apply_direction(self, d: np.ndarray) -> np.ndarray:
        return self.rotation @ np.asarray(d, dtype=float)

    def apply_cloud(self, cloud: "PointCloud") -> "PointCloud":
        pts = cloud.points @ self.rotation.T + self.translation
        nrm = cloud.normals @ self.rotation.T
        return PointCloud(pts, nrm)

    def to_dict(self) -> dict:
        return {"rotation": self.rotation.tolist(),
                "translation_m": self.translation.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "Pose":
        return Pose(np.array(d["rotation"], dtype=float),
                    np.array(d["translation_m"], dtype=float))


def transform_pose(T: Pose, x):
    """Apply a rigid transform: points affinely, poses by composition,
    clouds point-wise with rotation-only normals.

    Bare vectors are treated as points; use ``T.apply_direction`` for
    direction vectors (normals, velocities), which ignore translation.
    """
    if not isinstance(T, Pose):
        raise InvalidTransformError("first argument must be a Pose")
    if isinstance(x, Pose):
        return T.compose(x)
    if isinstance(x, PointCloud):
        return T.apply_cloud(x)
    return T.apply_point(x)


@dataclass(frozen=True, eq=False)
class RigidBodyModel:
    """Mass properties plus contact coefficients of the held tool.

    ``inertia`` is about the COM in the body frame; the restitution and
    friction coefficients are category priors of the tool material.
    """

    mass: float
    com: np.ndarray
    inertia: np.ndarray
    restitution: float
    friction: float

    def __post_init__(self):
        object.__setattr__(self, "com", np.asarray(self.com, dtype=float).reshape(3))
        object.__setattr__(self, "inertia", np.asarray(self.inertia, dtype=float))
        self.validate()

    def validate(self):
        if not self.mass > 0.0:
            raise InvalidModelError(f"mass must be positive, got {self.mass}")
        I = self.inertia
        if I.shape != (3, 3) or np.any(np.abs(I - I.T) > 1e-9):
            raise InvalidModelError("inertia must be symmetric 3x3")
        evals = np.linalg.eigvalsh(I)
        if np.any(evals <= 0.0):
            raise InvalidModelError(f"inertia not positive-definite: {evals}")
        a, b, c = np.sort(evals)
        if a + b < c - 1e-9 * max(c, 1.0):
            raise InvalidModelError("principal moments violate triangle inequality")
        if not 0.0 <= self.restitution <= 1.0:
            raise InvalidModelError("restitution must lie in [0, 1]")
        if self.friction < 0.0:
            raise InvalidModelError("friction must be non-negative")


@dataclass(frozen=True, eq=False)
class Primitive:
    """One convex solid of a tool model.

    dims: box = (sx, sy, sz) full side lengths, cylinder = (radius, height)
    with the axis along local z, sphere = (radius,).
    """

    shape: str
    dims: tuple
    density: float
    pose: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        if self.shape not in _SHAPE_NDIMS:
            raise InvalidModelError(f"unknown primitive shape {self.shape!r}")
        dims = tuple(float(d) for d in self.dims)
        if len(dims) != _SHAPE_NDIMS[self.shape]:
            raise InvalidModelError(
                f"{self.shape} expects {_SHAPE_NDIMS[self.shape]} dims, got {len(dims)}")
        if any(d <= 0.0 for d in dims):
            raise InvalidModelError(f"{self.shape} dimensions must be positive: {dims}")
        if self.density <= 0.0:
            raise InvalidModelError(f"density must be positive, got {self.density}")
        object.__setattr__(self, "dims", dims)

    def volume(self) -> float:
        if self.shape == "box":
            sx, sy, sz = self.dims
            return sx * sy * sz
        if self.shape == "cylinder":
            r, h = self.dims
            return math.pi * r * r * h
        r, = self.dims
        return 4.0 / 3.0 * math.pi * r ** 3

    def mass(self) -> float:
        return self.density * self.volume()

    def local_inertia(self) -> np.ndarray:
        """Inertia about the primitive's own COM in its local frame."""
        m = self.mass()
        if self.shape == "box":
            sx, sy, sz = self.dims
            return m / 12.0 * np.diag([sy * sy + sz * sz,
                                       sx * sx + sz * sz,
                                       sx * sx + sy * sy])
        if self.shape == "cylinder":
            r, h = self.dims
            ixx = m * (3.0 * r * r + h * h) / 12.0
            return np.diag([ixx, ixx, m * r * r / 2.0])
        r, = self.dims
        return np.diag([2.0 / 5.0 * m * r * r] * 3)

    def contains(self, p: np.ndarray, shrink: float = 0.0) -> bool:
        """True if the tool-frame point lies strictly inside, inset by shrink."""
        q = self.pose.inverse().apply_point(p)
        if self.shape == "box":
            sx, sy, sz = self.dims
            h = np.array([sx, sy, sz]) / 2.0 - shrink
            return bool(np.all(np.abs(q) < h))
        if self.shape == "cylinder":
            r, h = self.dims
            return (math.hypot(q[0], q[1]) < r - shrink
                    and abs(q[2]) < h / 2.0 - shrink)
        r, = self.dims
        return float(np.linalg.norm(q)) < r - shrink

    def surface_area(self) -> float:
        if self.shape == "box":
            sx, sy, sz = self.dims
            return 2.0 * (sx * sy + sy * sz + sx * sz)
        if self.shape == "cylinder":
            r, h = self.dims
            return 2.0 * math.pi * r * h + 2.0 * math.pi * r * r
        r, = self.dims
        return 4.0 * math.pi * r * r


@dataclass(frozen=True, eq=False)
class ToolModel:
    """Union of parametric primitives standing in for a segmented tool mesh."""

    primitives: tuple
    category: str = "tool"

    def __post_init__(self):
        prims = tuple(self.primitives)
        if not prims:
            raise InvalidModelError("tool needs at least one primitive")
        object.__setattr__(self, "primitives", prims)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Surface samples with outward unit normals, one normal per point."""

    points: np.ndarray
    normals: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        nrm = np.asarray(self.normals, dtype=float).reshape(-1, 3)
        if len(pts) != len(nrm):
            raise InvalidInputError(
                f"point/normal count mismatch: {len(pts)} vs {len(nrm)}")
        if len(nrm) and np.any(np.abs(np.linalg.norm(nrm, axis=1) - 1.0) > UNIT_TOL):
            raise InvalidInputError("normals must be unit length")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "normals", nrm)

    def __len__(self):
        return len(self.points)


def compose_inertia(tool: ToolModel) -> RigidBodyModel:
    """Aggregate mass, COM and inertia of a primitive union.

    Each primitive contributes its closed-form inertia, rotated into the
    tool frame and transported to the composite COM by the parallel-axis
    theorem. Overlapping primitives are summed as-is (no boolean
    subtraction); keep compositions disjoint for exact results.
    """
    masses = [p.mass() for p in tool.primitives]
    total = sum(masses)
    centers = [p.pose.translation for p in tool.primitives]
    com = sum(m * c for m, c in zip(masses, centers)) / total
    inertia = np.zeros((3, 3))
    for p, m, c in zip(tool.primitives, masses, centers):
        R = p.pose.rotation
        I_tool = R @ p.local_inertia() @ R.T
        d = c - com
        inertia += I_tool + m * (float(d @ d) * np.eye(3) - np.outer(d, d))
    return RigidBodyModel(mass=total, com=com, inertia=inertia,
                          restitution=0.3, friction=0.6)


def _box_face_samples(dims, n, rng):
    sx, sy, sz = dims
    areas = np.array([sy * sz, sy * sz, sx * sz, sx * sz, sx * sy, sx * sy])
    face = rng.choice(6, size=n, p=areas / areas.sum())
    u = rng.uniform(-0.5, 0.5, size=(n, 2))
    pts = np.empty((n, 3))
    nrm = np.zeros((n, 3))
    half = np.array([sx, sy, sz]) / 2.0
    for axis in range(3):
        for sign in (1.0, -1.0):
            idx = face == (axis * 2 + (0 if sign > 0 else 1))
            if not np.any(idx):
                continue
            others = [a for a in range(3) if a != axis]
            pts[np.ix_(idx, [axis])] = sign * half[axis]
            pts[np.ix_(idx, [others[0]])] = (u[idx, 0] * 2 * half[others[0]])[:, None]
            pts[np.ix_(idx, [others[1]])] = (u[idx, 1] * 2 * half[others[1]])[:, None]
            nrm[idx, axis] = sign
    return pts, nrm


def _cylinder_samples(dims, n, rng):
    r, h = dims
    lateral = 2.0 * math.pi * r * h
    cap = math.pi * r * r
    which = rng.choice(3, size=n, p=np.array([lateral, cap, cap]) / (lateral + 2 * cap))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    pts = np.empty((n, 3))
    nrm = np.zeros((n, 3))
    lat = which == 0
    pts[lat, 0] = r * np.cos(theta[lat])
    pts[lat, 1] = r * np.sin(theta[lat])
    pts[lat, 2] = rng.uniform(-h / 2.0, h / 2.0, size=int(lat.sum()))
    nrm[lat, 0] = np.cos(theta[lat])
    nrm[lat, 1] = np.sin(theta[lat])
    for cap_id, zsign in ((1, 1.0), (2, -1.0)):
        idx = which == cap_id
        if not np.any(idx):
            continue
        # area-uniform radius on the disk
        rr = r * np.sqrt(rng.uniform(0.0, 1.0, size=int(idx.sum())))
        pts[idx, 0] = rr * np.cos(theta[idx])
        pts[idx, 1] = rr * np.sin(theta[idx])
        pts[idx, 2] = zsign * h / 2.0
        nrm[idx, 2] = zsign
    return pts, nrm


def _sphere_samples(dims, n, rng):
    r, = dims
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return r * v, v.copy()


_SAMPLERS = {"box": _box_face_samples, "cylinder": _cylinder_samples,
             "sphere": _sphere_samples}


def sample_surface(tool: ToolModel, count: int, seed: int) -> PointCloud:
    """Area-weighted uniform samples on the union surface of a tool.

    Points falling strictly inside a sibling primitive are rejected so
    the cloud lies on the union boundary. Deterministic per seed.
    """
    if count <= 0:
        raise InvalidInputError("count must be positive")
    rng = np.random.default_rng(seed)
    areas = np.array([p.surface_area() for p in tool.primitives])
    weights = areas / areas.sum()
    pts_out, nrm_out = [], []
    needed = count
    for _ in range(64):
        if needed <= 0:
            break
        draw = max(needed * 2, 8)
        pick = rng.choice(len(tool.primitives), size=draw, p=weights)
        for k, prim in enumerate(tool.primitives):
            n_k = int((pick == k).sum())
            if n_k == 0:
                continue
            local, local_n = _SAMPLERS[prim.shape](prim.dims, n_k, rng)
            world = local @ prim.pose.rotation.T + prim.pose.translation
            world_n = local_n @ prim.pose.rotation.T
            keep = np.ones(n_k, dtype=bool)
            for j, other in enumerate(tool.primitives):
                if j == k:
                    continue
                keep &= ~np.array([other.contains(p, shrink=1e-9) for p in world])
            pts_out.append(world[keep])
            nrm_out.append(world_n[keep])
        needed = count - sum(len(a) for a in pts_out)
    pts = np.concatenate(pts_out)[:count]
    nrm = np.concatenate(nrm_out)[:count]
    if len(pts) < count:
        raise InvalidModelError("surface sampling starved; primitives fully occluded")
    return PointCloud(pts, nrm)


def load_obj_cloud(path) -> PointCloud:
    """Read ASCII OBJ `v`/`vn` lines into a PointCloud (1:1 pairing required)."""
    pts, nrm = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                pts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "vn":
                nrm.append([float(x) for x in parts[1:4]])
    if len(pts) != len(nrm):
        raise InvalidInputError(
            f"OBJ must pair v/vn 1:1, got {len(pts)} vertices and {len(nrm)} normals")
    if not pts:
        raise InvalidInputError("OBJ contains no vertices")
    normals = np.array(nrm, dtype=float)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return PointCloud(np.array(pts, dtype=float), normals)

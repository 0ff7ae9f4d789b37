"""Antipodal candidate sampling, geometry-only scoring, and selection."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NoCandidateError
from .spatial import Pose, PointCloud, unit

log = logging.getLogger(__name__)

ANTIPODAL_CONE_DEG = 20.0
DEFAULT_CLAMP_FORCE = 40.0  # N
FLATNESS_RADIUS = 0.02      # m, neighborhood for the contact-patch term


@dataclass(frozen=True, eq=False)
class GraspCandidate:
    """Parallel-jaw grasp: frame, closure direction and contact pair.

    For a parallel jaw the pad surface normal coincides with the closure
    direction, so finger_normal is kept parallel to closure_axis; both are
    expressed in the tool body frame, like the contact pair.
    """

    pose: Pose
    closure_axis: np.ndarray
    finger_normal: np.ndarray
    jaw_width: float
    clamp_force: float
    contact_pair: tuple

    def __post_init__(self):
        a = unit(np.asarray(self.closure_axis, dtype=float))
        nf = unit(np.asarray(self.finger_normal, dtype=float))
        object.__setattr__(self, "closure_axis", a)
        object.__setattr__(self, "finger_normal", nf)
        object.__setattr__(self, "contact_pair",
                           tuple(np.asarray(p, dtype=float).reshape(3)
                                 for p in self.contact_pair))
        if abs(abs(float(a @ nf)) - 1.0) > 1e-6:
            raise InvalidInputError("finger normal must lie along the closure axis")
        if not self.jaw_width > 0.0:
            raise InvalidInputError("jaw width must be positive")
        if not self.clamp_force > 0.0:
            raise InvalidInputError("clamp force must be positive")
        sep = float(np.linalg.norm(self.contact_pair[1] - self.contact_pair[0]))
        if sep > self.jaw_width + 1e-9:
            raise InvalidInputError("contact pair wider than the jaw")

    def to_dict(self) -> dict:
        return {
            "pose": self.pose.to_dict(),
            "closure_axis": self.closure_axis.tolist(),
            "finger_normal": self.finger_normal.tolist(),
            "jaw_width_m": self.jaw_width,
            "clamp_force_n": self.clamp_force,
            "contact_pair_m": [p.tolist() for p in self.contact_pair],
        }

    @staticmethod
    def from_dict(d: dict) -> "GraspCandidate":
        return GraspCandidate(
            pose=Pose.from_dict(d["pose"]),
            closure_axis=np.array(d["closure_axis"], dtype=float),
            finger_normal=np.array(d["finger_normal"], dtype=float),
            jaw_width=float(d["jaw_width_m"]),
            clamp_force=float(d["clamp_force_n"]),
            contact_pair=tuple(np.array(p, dtype=float) for p in d["contact_pair_m"]),
        )


def candidates_to_json(candidates, path=None) -> str:
    doc = {"schema_version": 1, "candidates": [c.to_dict() for c in candidates]}
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text


def candidates_from_json(text: str):
    doc = json.loads(text)
    return [GraspCandidate.from_dict(d) for d in doc["candidates"]]


def candidate_set_hash(candidates) -> str:
    """Stable digest of a candidate list, for shared-set verification."""
    payload = json.dumps([c.to_dict() for c in candidates], sort_keys=True)
    return hashlib.sha1(payload.encode()).hexdigest()[:16]


def _canonical_direction(u: np.ndarray) -> np.ndarray:
    """Deterministic sign: first component of magnitude > 1e-12 made positive."""
    for c in u:
        if abs(c) > 1e-12:
            return u if c > 0 else -u
    return u


def _grasp_frame(mid: np.ndarray, u: np.ndarray) -> Pose:
    # x = closure axis; z = approach, chosen repeatably from a fixed reference
    ref = np.array([0.0, 0.0, -1.0])
    if abs(float(u @ ref)) > 0.99:
        ref = np.array([0.0, 1.0, 0.0])
    z = unit(ref - float(ref @ u) * u)
    y = np.cross(z, u)
    return Pose(np.column_stack([u, y, z]), mid)


def sample_antipodal(cloud: PointCloud, jaw_max: float, count: int, seed: int,
                     clamp_force: float = DEFAULT_CLAMP_FORCE,
                     cone_deg: float = ANTIPODAL_CONE_DEG) -> list:
    """Sample parallel-jaw candidates from opposing surface-point pairs.

    A pair qualifies when the normals oppose within cone_deg, the pair
    line lies inside the same cone at both contacts, and the separation
    fits the jaw. Returns up to count candidates, deterministic per seed;
    an unfittable cloud yields an empty list with a logged warning.
    """
    if len(cloud) == 0:
        raise InvalidInputError("cannot sample grasps from an empty cloud")
    if count <= 0:
        raise InvalidInputError("count must be positive")
    rng = np.random.default_rng(seed)
    cos_cone = math.cos(math.radians(cone_deg))
    pts, nrm = cloud.points, cloud.normals
    out = []
    for _ in range(200 * count):
        if len(out) >= count:
            break
        i = int(rng.integers(len(pts)))
        delta = pts - pts[i]
        sep = np.linalg.norm(delta, axis=1)
        ok = (sep > 1e-6) & (sep <= jaw_max) & (nrm @ nrm[i] <= -cos_cone)
        if not np.any(ok):
            continue
        with np.errstate(invalid="ignore"):
            u_all = delta / np.where(sep[:, None] > 0, sep[:, None], 1.0)
        ok &= (u_all @ nrm[i] <= -cos_cone) & (np.einsum("ij,ij->i", u_all, nrm) >= cos_cone)
        idx = np.flatnonzero(ok)
        if len(idx) == 0:
            continue
        j = int(idx[rng.integers(len(idx))])
        p1, p2 = pts[i], pts[j]
        u = _canonical_direction(unit(p2 - p1))
        mid = (p1 + p2) / 2.0
        out.append(GraspCandidate(
            pose=_grasp_frame(mid, u), closure_axis=u, finger_normal=u,
            jaw_width=float(sep[j]), clamp_force=clamp_force,
            contact_pair=(p1, p2)))
    if not out:
        log.warning("no antipodal pair fits jaw_max=%.3f m on a %d-point cloud",
                    jaw_max, len(cloud))
    elif len(out) < count:
        log.warning("sampled only %d of %d requested candidates", len(out), count)
    return out


# a neighbor belongs to the contacted patch when its normal stays within
# 60 degrees of the contact normal; this keeps the far wall of thin parts
# and perpendicular faces (whose dot sits exactly at 0) out of the patch
_SAME_PATCH_MIN_COS = 0.5


def _patch_flatness(cloud: PointCloud, p: np.ndarray, radius: float) -> float:
    d = np.linalg.norm(cloud.points - p, axis=1)
    n_ref = cloud.normals[int(np.argmin(d))]
    near = cloud.normals[(d <= radius) & (cloud.normals @ n_ref > _SAME_PATCH_MIN_COS)]
    if len(near) < 2:
        return 1.0
    mean_n = unit(near.mean(axis=0))
    return float(np.clip(near @ mean_n, 0.0, 1.0).mean())


def geometry_score(g: GraspCandidate, cloud: PointCloud,
                   radius: float = FLATNESS_RADIUS) -> float:
    """Trajectory-blind quality in [0, 1]: antipodality times patch flatness.

    score = 0.5 (1 - n1 . n2) * mean patch flatness, where flatness of a
    contact is the mean cosine between neighborhood normals and their
    average. Perfectly opposing normals on flat patches score 1.0.
    """
    p1, p2 = g.contact_pair
    d1 = np.linalg.norm(cloud.points - p1, axis=1)
    d2 = np.linalg.norm(cloud.points - p2, axis=1)
    n1 = cloud.normals[int(np.argmin(d1))]
    n2 = cloud.normals[int(np.argmin(d2))]
    antipodality = 0.5 * (1.0 - float(n1 @ n2))
    flatness = 0.5 * (_patch_flatness(cloud, p1, radius)
                      + _patch_flatness(cloud, p2, radius))
    return float(np.clip(antipodality * flatness, 0.0, 1.0))


def select_grasp(candidates, scorer):
    """Pick the candidate minimizing scorer(g).total.

    Ties break toward lower c_tau, then lower candidate index. scorer
    must return an object with .total and .c_tau (a CostBreakdown).
    """
    candidates = list(candidates)
    if not candidates:
        raise NoCandidateError("no grasp candidates to select from")
    best = None
    for k, g in enumerate(candidates):
        b = scorer(g)
        key = (b.total, b.c_tau, k)
        if best is None or key < best[0]:
            best = (key, g, b)
    return best[1], best[2]

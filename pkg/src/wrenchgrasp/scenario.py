"""Scenario files: one JSON document pins tool, contact, motion and config.

Field names carry units (`_m`, `_kg`, `_mps`, ...) because unit slips are
the dominant failure mode in mechanics code. Loading applies documented
defaults and echoes them back, so a saved scenario is fully explicit.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from dataclasses import dataclass

import numpy as np

from .dynsim import SimConfig
from .errors import ScenarioError
from .cost import CostWeights
from .grasp import sample_antipodal
from .motion import (ContactParams, single_target, sweep_targets,
                     synth_trajectory)
from .spatial import (Pose, Primitive, RigidBodyModel, ToolModel,
                      compose_inertia, sample_surface)
from .wrench import DEFAULT_IMPULSE_DT

SCHEMA_VERSION = 1

_MISSING = object()

DEFAULT_SCENARIO_NAMES = ("hammer", "sweep", "knock", "reach")


def _get(doc: dict, path: str, default=_MISSING):
    node = doc
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is _MISSING:
                raise ScenarioError(f"{path}: missing required field")
            return default
        node = node[part]
    return node


def _unit3(doc, path):
    v = np.array(_get(doc, path), dtype=float)
    if v.shape != (3,):
        raise ScenarioError(f"{path}: expected 3 components")
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > 1e-3:
        raise ScenarioError(f"{path}: must be a unit vector (norm {n:.4f})")
    return v / n


def _vec3(doc, path, default=_MISSING):
    v = _get(doc, path, default)
    v = np.array(v, dtype=float)
    if v.shape != (3,):
        raise ScenarioError(f"{path}: expected 3 components")
    return v


def _pose_from(doc: dict, path_prefix: str) -> Pose:
    rot = np.array(_get(doc, f"{path_prefix}.rotation", np.eye(3).tolist()), dtype=float)
    tr = _vec3(doc, f"{path_prefix}.translation_m", [0.0, 0.0, 0.0])
    try:
        return Pose(rot, tr)
    except Exception as exc:
        raise ScenarioError(f"{path_prefix}: {exc}") from exc


@dataclass(frozen=True, eq=False)
class Scenario:
    """Validated scenario with every default applied; doc echoes the result."""

    name: str
    tool: ToolModel
    body: RigidBodyModel
    omega: ContactParams
    trajectory_kind: str
    trajectory_params: dict
    targets_spec: dict | None
    jaw_max: float
    candidate_count: int
    clamp_force: float
    cloud_points: int
    cloud_seed: int
    weights: CostWeights
    impulse_dt: float
    sim: SimConfig
    seeds: tuple
    doc: dict

    def trajectory(self):
        return synth_trajectory(self.trajectory_kind, self.trajectory_params,
                                self.omega)

    def targets(self):
        if self.targets_spec is None:
            return single_target(self.omega)
        return sweep_targets(self.omega, self.targets_spec["count"],
                             self.targets_spec["spacing_m"],
                             self.targets_spec["masses_kg"])

    def cloud(self):
        return sample_surface(self.tool, self.cloud_points, self.cloud_seed)

    def candidates(self, cloud, seed: int):
        return sample_antipodal(cloud, self.jaw_max, self.candidate_count,
                                seed, clamp_force=self.clamp_force)

    def to_dict(self) -> dict:
        return self.doc


def _parse_tool(doc) -> ToolModel:
    prims_doc = _get(doc, "tool.primitives")
    if not isinstance(prims_doc, list) or not prims_doc:
        raise ScenarioError("tool.primitives: need a non-empty list")
    prims = []
    for i, p in enumerate(prims_doc):
        prefix = f"tool.primitives[{i}]"
        try:
            prims.append(Primitive(
                shape=_get(p, "shape"),
                dims=tuple(_get(p, "dims_m")),
                density=float(_get(p, "density_kgpm3")),
                pose=_pose_from(p, "pose") if "pose" in p else Pose.identity()))
        except ScenarioError as exc:
            raise ScenarioError(f"{prefix}.{exc}") from exc
        except Exception as exc:
            raise ScenarioError(f"{prefix}: {exc}") from exc
    return ToolModel(tuple(prims), category=_get(doc, "tool.category", "tool"))


def parse_scenario(doc: dict) -> Scenario:
    """Validate a scenario document, applying and echoing defaults."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario root must be a JSON object")
    name = _get(doc, "name")
    tool = _parse_tool(doc)

    base = compose_inertia(tool)
    restitution = float(_get(doc, "body.restitution", 0.3))
    friction = float(_get(doc, "body.friction", 0.6))
    mass_scale = float(_get(doc, "body.mass_scale", 1.0))
    if not mass_scale > 0.0:
        raise ScenarioError("body.mass_scale: must be positive")
    try:
        body = RigidBodyModel(mass=base.mass * mass_scale, com=base.com,
                              inertia=base.inertia * mass_scale,
                              restitution=restitution, friction=friction)
    except Exception as exc:
        raise ScenarioError(f"body: {exc}") from exc

    omega = ContactParams(
        c_tool=_vec3(doc, "omega.c_tool_m"),
        c_obj=_vec3(doc, "omega.c_obj_m"),
        n=_unit3(doc, "omega.n"),
        d=_unit3(doc, "omega.d"))

    kind = _get(doc, "trajectory.kind")
    params = {k: v for k, v in _get(doc, "trajectory").items() if k != "kind"}
    params.setdefault("horizon_s", 1.0)
    params.setdefault("samples", 201)

    targets_spec = None
    if "sweep_targets" in doc:
        count = int(_get(doc, "sweep_targets.count"))
        spacing = float(_get(doc, "sweep_targets.spacing_m", 0.06))
        masses = _get(doc, "sweep_targets.masses_kg", [math.inf] * count)
        if len(masses) != count:
            raise ScenarioError("sweep_targets.masses_kg: length must equal count")
        targets_spec = {"count": count, "spacing_m": spacing,
                        "masses_kg": [float(m) for m in masses]}

    jaw_max = float(_get(doc, "sampler.jaw_max_m", 0.04))
    count = int(_get(doc, "sampler.count", 100))
    clamp = float(_get(doc, "sampler.clamp_force_n", 40.0))
    cloud_points = int(_get(doc, "sampler.cloud_points", 1500))
    cloud_seed = int(_get(doc, "sampler.cloud_seed", 0))

    weights = CostWeights(
        w_tau=float(_get(doc, "weights.w_tau", 1.0)),
        w_s=float(_get(doc, "weights.w_s", 1.0)),
        w_alpha=float(_get(doc, "weights.w_alpha", 1.0)))

    impulse_dt = float(_get(doc, "impulse_dt_s", DEFAULT_IMPULSE_DT))
    try:
        sim = SimConfig(
            dt_sim=float(_get(doc, "sim.dt_sim_s", 0.001)),
            mu_g=float(_get(doc, "sim.mu_g", 0.6)),
            clamp_force=float(_get(doc, "sim.clamp_force_n", clamp)),
            a_patch=float(_get(doc, "sim.a_patch_m", 0.01)),
            slip_limit=float(_get(doc, "sim.slip_limit_m", 0.005)),
            rotation_limit=float(_get(doc, "sim.rotation_limit_rad", math.radians(10))),
            seed=int(_get(doc, "sim.seed", 0)),
            impulse_dt=impulse_dt,
            slip_mobility=float(_get(doc, "sim.slip_mobility", 0.0015)),
            rot_mobility=float(_get(doc, "sim.rot_mobility", 0.8)),
            gravity=bool(_get(doc, "sim.gravity", True)))
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(f"sim: {exc}") from exc

    seeds = _get(doc, "seeds", [0])
    if not isinstance(seeds, list) or not seeds:
        raise ScenarioError("seeds: must be a non-empty list")
    seeds = tuple(int(s) for s in seeds)

    echoed = {
        "schema_version": SCHEMA_VERSION,
        "name": name,
        "tool": {
            "category": tool.category,
            "primitives": [
                {"shape": p.shape, "dims_m": list(p.dims),
                 "density_kgpm3": p.density, "pose": p.pose.to_dict()}
                for p in tool.primitives],
        },
        "body": {"restitution": restitution, "friction": friction,
                 "mass_scale": mass_scale},
        "omega": omega.to_dict(),
        "trajectory": {"kind": kind, **params},
        "sampler": {"jaw_max_m": jaw_max, "count": count, "clamp_force_n": clamp,
                    "cloud_points": cloud_points, "cloud_seed": cloud_seed},
        "weights": {"w_tau": weights.w_tau, "w_s": weights.w_s,
                    "w_alpha": weights.w_alpha},
        "impulse_dt_s": impulse_dt,
        "sim": {"dt_sim_s": sim.dt_sim, "mu_g": sim.mu_g,
                "clamp_force_n": sim.clamp_force, "a_patch_m": sim.a_patch,
                "slip_limit_m": sim.slip_limit,
                "rotation_limit_rad": sim.rotation_limit, "seed": sim.seed,
                "slip_mobility": sim.slip_mobility,
                "rot_mobility": sim.rot_mobility, "gravity": sim.gravity},
        "seeds": list(seeds),
    }
    if targets_spec is not None:
        echoed["sweep_targets"] = targets_spec

    return Scenario(name=name, tool=tool, body=body, omega=omega,
                    trajectory_kind=kind, trajectory_params=params,
                    targets_spec=targets_spec, jaw_max=jaw_max,
                    candidate_count=count, clamp_force=clamp,
                    cloud_points=cloud_points, cloud_seed=cloud_seed,
                    weights=weights, impulse_dt=impulse_dt, sim=sim,
                    seeds=seeds, doc=echoed)


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return parse_scenario(doc)


def save_scenario(scn: Scenario, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scn.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_default_scenario(name: str) -> Scenario:
    """Load one of the packaged task scenarios (hammer/sweep/knock/reach)."""
    if name not in DEFAULT_SCENARIO_NAMES:
        raise ScenarioError(f"no default scenario named {name!r}")
    ref = importlib.resources.files("wrenchgrasp.data").joinpath(f"{name}.json")
    return parse_scenario(json.loads(ref.read_text(encoding="utf-8")))

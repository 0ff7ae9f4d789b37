"""Randomized corpus generation for surrogate training.

Draws desk-scale (tool, grasp, trajectory, contact) combinations across
the four interaction profiles and labels every candidate with its analytic
penalties. Material coefficients stay at category priors; geometry, mass,
grasps, speeds and contact layout vary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .cost import CostWeights, analytic_cost
from .grasp import sample_antipodal
from .motion import ContactParams, single_target, sweep_targets, synth_trajectory
from .spatial import Pose, Primitive, ToolModel, compose_inertia, sample_surface, unit
from .surrogate import FEATURE_NAMES, LabeledExample, featurize

_KINDS = ("hammer", "knock", "reach", "sweep")

# local z of the handle cylinder mapped onto tool x
_HANDLE_ALONG_X = Pose(np.array([[0.0, 0.0, 1.0],
                                 [0.0, 1.0, 0.0],
                                 [-1.0, 0.0, 0.0]]), np.zeros(3))


def _random_tool(rng) -> ToolModel:
    """Stick- or hammer-like primitive union with the working end at +x."""
    length = rng.uniform(0.18, 0.40)
    radius = rng.uniform(0.010, 0.018)
    density = rng.uniform(400.0, 1200.0)
    handle = Primitive("cylinder", (radius, length), density,
                       Pose(_HANDLE_ALONG_X.rotation, np.array([length / 2, 0.0, 0.0])))
    if rng.random() < 0.5:
        return ToolModel((handle,), category="stick")
    head = rng.uniform(0.045, 0.07, size=3)
    head_density = rng.uniform(1500.0, 4000.0)
    head_pose = Pose(np.eye(3), np.array([length + head[0] / 2, 0.0, 0.0]))
    return ToolModel((handle, Primitive("box", tuple(head), head_density, head_pose)),
                     category="hammer")


def _working_point(tool: ToolModel) -> np.ndarray:
    """Far-end contact point of the tool, on its surface."""
    if len(tool.primitives) > 1:
        head = tool.primitives[1]
        return head.pose.translation + np.array([0.0, 0.0, -head.dims[2] / 2])
    radius, length = tool.primitives[0].dims
    return np.array([length, 0.0, 0.0])


def _random_scene(rng):
    tool = _random_tool(rng)
    body = compose_inertia(tool)
    kind = _KINDS[int(rng.integers(len(_KINDS)))]
    c_tool = _working_point(tool)
    if kind in ("hammer",):
        n = np.array([0.0, 0.0, 1.0])
        d = np.array([1.0, 0.0, 0.0])
    else:
        # horizontal push/tap/sweep along +x against a facing surface
        n = np.array([-1.0, 0.0, 0.0])
        d = np.array([1.0, 0.0, 0.0])
        if kind == "sweep":
            d = np.array([0.0, 1.0, 0.0])
            n = np.array([0.0, -1.0, 0.0])
    c_obj = rng.uniform(-0.2, 0.2, size=3)
    params = {"horizon_s": 1.0, "samples": 201}
    targets = None
    if kind == "hammer":
        params["v_peak_mps"] = rng.uniform(0.8, 3.0)
        params["arm_length_m"] = rng.uniform(0.25, 0.45)
    elif kind == "knock":
        params["v_peak_mps"] = rng.uniform(0.3, 1.5)
    elif kind == "reach":
        params["v_push_mps"] = rng.uniform(0.02, 0.15)
    else:
        params["v_sweep_mps"] = rng.uniform(0.3, 1.0)
    omega = ContactParams(c_tool, c_obj, n, d)
    if kind == "sweep":
        k = int(rng.integers(2, 5))
        masses = rng.uniform(0.02, 0.2, size=k)
        targets = sweep_targets(omega, k, spacing=rng.uniform(0.04, 0.08),
                                masses=masses)
    traj = synth_trajectory(kind, params, omega)
    return tool, body, omega, traj, targets


@dataclass
class DatasetMeta:
    groups: int
    per_group: int
    seed: int
    kinds: tuple = _KINDS


def generate_dataset(groups: int, per_group: int, seed: int,
                     jaw_max: float = 0.04):
    """Label per_group antipodal candidates in each of `groups` random scenes."""
    rng = np.random.default_rng(seed)
    weights = CostWeights()
    examples = []
    gid = 0
    attempts = 0
    while gid < groups and attempts < groups * 4:
        attempts += 1
        tool, body, omega, traj, targets = _random_scene(rng)
        cloud = sample_surface(tool, 1200, seed=int(rng.integers(2 ** 31)))
        cands = sample_antipodal(cloud, jaw_max, per_group,
                                 seed=int(rng.integers(2 ** 31)))
        if len(cands) < per_group:
            continue
        for g in cands:
            b = analytic_cost(g, traj, omega, body, weights, targets=targets)
            x = featurize(g, cloud, traj, omega, body, targets=targets)
            examples.append(LabeledExample(x, np.array([b.c_tau, b.c_slip, b.c_align]),
                                           group=gid))
        gid += 1
    if gid < groups:
        raise RuntimeError(f"dataset generation starved after {attempts} attempts")
    return examples, DatasetMeta(groups=groups, per_group=per_group, seed=seed)


def split_by_group(examples, fractions=(0.8, 0.1, 0.1), seed: int = 0):
    """Group-wise train/val/test split so held-out scenes stay whole."""
    rng = np.random.default_rng(seed)
    groups = sorted({e.group for e in examples})
    order = rng.permutation(len(groups))
    n_train = int(round(fractions[0] * len(groups)))
    n_val = int(round(fractions[1] * len(groups)))
    train_g = {groups[i] for i in order[:n_train]}
    val_g = {groups[i] for i in order[n_train:n_train + n_val]}
    train = [e for e in examples if e.group in train_g]
    val = [e for e in examples if e.group in val_g]
    test = [e for e in examples if e.group not in train_g and e.group not in val_g]
    return train, val, test


_CSV_HEADER = list(FEATURE_NAMES) + ["c_tau", "c_slip", "c_align", "group"]


def write_dataset_csv(examples, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("# schema_version=1\n")
        w = csv.writer(fh)
        w.writerow(_CSV_HEADER)
        for e in examples:
            w.writerow([repr(float(v)) for v in e.features]
                       + [repr(float(v)) for v in e.targets] + [e.group])


def read_dataset_csv(path):
    examples = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, rows = rows[0], rows[1:]
    if header != _CSV_HEADER:
        raise ValueError(f"unexpected dataset columns: {header}")
    n_f = len(FEATURE_NAMES)
    for r in rows:
        examples.append(LabeledExample(
            np.array([float(v) for v in r[:n_f]]),
            np.array([float(v) for v in r[n_f:n_f + 3]]),
            group=int(r[-1])))
    return examples

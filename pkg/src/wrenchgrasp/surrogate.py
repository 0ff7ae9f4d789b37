"""Learned stand-in for the analytic cost: invariant features -> small MLP.

The network predicts the three penalty components from ten frame-invariant
scalars, so its outputs inherit rigid-transform invariance exactly. It is
trained on analytic-cost labels with a summed squared error over the three
heads, by plain mini-batch gradient descent with momentum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, TrainingFailedError
from .grasp import _patch_flatness
from .motion import (ContactParams, Trajectory, closest_approach_index,
                     contact_events, single_target)
from .spatial import PointCloud, RigidBodyModel

FEATURE_NAMES = (
    "lever_m",          # grasp origin to tool contact point
    "com_lever_m",      # COM to tool contact point
    "cos_finger_n",     # finger normal vs interaction normal
    "cos_closure_n",    # closure axis vs interaction normal
    "approach_mps",     # peak approach speed over events
    "omega_radps",      # angular speed at the peak event
    "mass_kg",
    "curvature",        # 1 - mean patch flatness at the contact pair
    "jaw_m",
    "events",
)
N_FEATURES = len(FEATURE_NAMES)
TARGET_NAMES = ("c_tau", "c_slip", "c_align")


@dataclass(frozen=True, eq=False)
class LabeledExample:
    features: np.ndarray
    targets: np.ndarray
    group: int = 0

    def __post_init__(self):
        f = np.asarray(self.features, dtype=float).reshape(-1)
        t = np.asarray(self.targets, dtype=float).reshape(-1)
        if len(f) != N_FEATURES or len(t) != 3:
            raise InvalidInputError("example has wrong feature/target arity")
        if np.any(t < 0.0):
            raise InvalidInputError("penalty targets must be non-negative")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "targets", t)


def featurize(g, cloud: PointCloud, traj: Trajectory, omega: ContactParams,
              body: RigidBodyModel, targets=None) -> np.ndarray:
    """Ten invariant scalars describing (grasp, geometry, motion).

    All quantities are evaluated in the tool body frame or as norms, so a
    rigid transform of the whole scene leaves the vector unchanged. With
    no contact events the speed features are zero and the normal is taken
    at the closest-approach pose.
    """
    if len(cloud) == 0:
        raise InvalidInputError("cannot featurize against an empty cloud")
    events = contact_events(traj, omega, targets=targets)
    if events:
        ev = max(events, key=lambda e: e.approach_speed)
        R = traj.rotations[ev.sample_index]
        n_tool = R.T @ ev.target.n
        approach = ev.approach_speed
        w_norm = float(np.linalg.norm(ev.omega))
    else:
        idx = closest_approach_index(traj, omega,
                                     (targets or single_target(omega))[0])
        n_tool = traj.rotations[idx].T @ omega.n
        approach = 0.0
        w_norm = 0.0
    p1, p2 = g.contact_pair
    curvature = 1.0 - 0.5 * (_patch_flatness(cloud, p1, 0.02)
                             + _patch_flatness(cloud, p2, 0.02))
    return np.array([
        float(np.linalg.norm(omega.c_tool - g.pose.translation)),
        float(np.linalg.norm(omega.c_tool - body.com)),
        float(g.finger_normal @ n_tool),
        float(g.closure_axis @ n_tool),
        approach,
        w_norm,
        body.mass,
        curvature,
        g.jaw_width,
        float(len(events)),
    ])


def _softplus(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))


@dataclass
class MlpModel:
    """Fully-connected tanh network with non-negative softplus output heads.

    Inputs are standardized by (input_mean, input_std); each head's
    softplus is scaled by target_scale so the raw-unit targets stay well
    conditioned during training.
    """

    layer_sizes: tuple = (N_FEATURES, 64, 64, 3)
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    input_mean: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES))
    input_std: np.ndarray = field(default_factory=lambda: np.ones(N_FEATURES))
    target_scale: np.ndarray = field(default_factory=lambda: np.ones(3))

    @staticmethod
    def initialize(layer_sizes=(N_FEATURES, 64, 64, 3), seed: int = 0) -> "MlpModel":
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            weights.append(rng.normal(0.0, math.sqrt(1.0 / n_in), size=(n_out, n_in)))
            biases.append(np.zeros(n_out))
        return MlpModel(tuple(layer_sizes), weights, biases,
                        np.zeros(layer_sizes[0]), np.ones(layer_sizes[0]),
                        np.ones(layer_sizes[-1]))

    def parameters(self):
        return self.weights + self.biases

    def copy(self) -> "MlpModel":
        return MlpModel(self.layer_sizes, [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], self.input_mean.copy(),
                        self.input_std.copy(), self.target_scale.copy())

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "layer_sizes": list(self.layer_sizes),
            "activation": "tanh",
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "input_mean": self.input_mean.tolist(),
            "input_std": self.input_std.tolist(),
            "target_scale": self.target_scale.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "MlpModel":
        return MlpModel(tuple(d["layer_sizes"]),
                        [np.array(w, dtype=float) for w in d["weights"]],
                        [np.array(b, dtype=float) for b in d["biases"]],
                        np.array(d["input_mean"], dtype=float),
                        np.array(d["input_std"], dtype=float),
                        np.array(d["target_scale"], dtype=float))

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path) -> "MlpModel":
        with open(path, "r", encoding="utf-8") as fh:
            return MlpModel.from_dict(json.load(fh))


def _forward_pass(model: MlpModel, X: np.ndarray):
    """Batch forward; returns outputs plus the activations for backprop."""
    Xs = (X - model.input_mean) / model.input_std
    acts = [Xs]
    z_list = []
    h = Xs
    n_layers = len(model.weights)
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ W.T + b
        z_list.append(z)
        h = _softplus(z) * model.target_scale if i == n_layers - 1 else np.tanh(z)
        acts.append(h)
    return h, z_list, acts


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Predicted (c_tau, c_slip, c_align) for one feature vector."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(x) != model.layer_sizes[0]:
        raise InvalidInputError(
            f"feature length {len(x)} != input layer {model.layer_sizes[0]}")
    y, _, _ = _forward_pass(model, x[None, :])
    return y[0]


def predict_cost(model: MlpModel, x: np.ndarray, w) -> float:
    """Weighted total of the predicted penalty heads."""
    c_tau, c_slip, c_align = forward(model, x)
    return w.w_tau * c_tau + w.w_s * c_slip + w.w_alpha * c_align


def loss_and_grad(model: MlpModel, X: np.ndarray, T: np.ndarray):
    """Mean over the batch of the per-example summed squared head error,
    plus its gradient with respect to every weight and bias."""
    Y, z_list, acts = _forward_pass(model, X)
    B = len(X)
    diff = Y - T
    loss = float(np.sum(diff * diff)) / B
    delta = (2.0 / B) * diff * model.target_scale * _sigmoid(z_list[-1])
    gW = [None] * len(model.weights)
    gb = [None] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        gW[i] = delta.T @ acts[i]
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i]) * (1.0 - acts[i] ** 2)
    return loss, gW, gb


def dataset_loss(model: MlpModel, examples) -> float:
    X = np.stack([e.features for e in examples])
    T = np.stack([e.targets for e in examples])
    Y, _, _ = _forward_pass(model, X)
    return float(np.sum((Y - T) ** 2)) / len(examples)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 200
    batch_size: int = 128
    momentum: float = 0.9
    seed: int = 0
    val_fraction: float = 0.1
    layer_sizes: tuple = (N_FEATURES, 64, 64, 3)


@dataclass
class TrainResult:
    model: MlpModel
    history: list          # per-epoch dicts: epoch, train_loss, val_loss
    best_epoch: int
    best_val_loss: float


def train(data, cfg: TrainConfig = TrainConfig(), val_data=None) -> TrainResult:
    """Fit the surrogate on analytic-cost labels.

    Splits off a validation fraction when val_data is not given, runs
    mini-batch gradient descent with momentum, and returns the parameters
    with the best validation loss. A non-finite loss aborts with the
    history attached.
    """
    data = list(data)
    if len(data) < 100:
        raise InvalidInputError(f"need at least 100 examples, got {len(data)}")
    rng = np.random.default_rng(cfg.seed)
    if val_data is None:
        order = rng.permutation(len(data))
        n_val = max(1, int(round(cfg.val_fraction * len(data))))
        val_data = [data[i] for i in order[:n_val]]
        data = [data[i] for i in order[n_val:]]
    else:
        val_data = list(val_data)

    X = np.stack([e.features for e in data])
    T = np.stack([e.targets for e in data])
    model = MlpModel.initialize(cfg.layer_sizes, seed=cfg.seed)
    model.input_mean = X.mean(axis=0)
    model.input_std = np.maximum(X.std(axis=0), 1e-9)
    model.target_scale = np.maximum(T.mean(axis=0), 1e-6)

    velocity = [np.zeros_like(p) for p in model.parameters()]
    history = []
    best = model.copy()
    best_val = math.inf
    best_epoch = -1
    n = len(X)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        train_loss = 0.0
        n_batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, gW, gb = loss_and_grad(model, X[idx], T[idx])
            if not math.isfinite(loss):
                raise TrainingFailedError(
                    f"loss diverged at epoch {epoch}", history=history)
            train_loss += loss
            n_batches += 1
            grads = gW + gb
            params = model.parameters()
            for p, v, g in zip(params, velocity, grads):
                v *= cfg.momentum
                v -= cfg.learning_rate * g
                p += v
        val_loss = dataset_loss(model, val_data)
        history.append({"epoch": epoch, "train_loss": train_loss / max(n_batches, 1),
                        "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best = model.copy()
            best_epoch = epoch
    return TrainResult(model=best, history=history, best_epoch=best_epoch,
                       best_val_loss=best_val)

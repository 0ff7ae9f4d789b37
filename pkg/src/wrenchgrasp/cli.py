"""Command-line front end.

Subcommands: score, simulate, sweep, gen-data, train, eval, phase.
Every invocation is a pure function of its inputs and seeds; outputs are
byte-stable so repeated runs can be diffed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import harness
from .cost import analytic_cost
from .datagen import generate_dataset, read_dataset_csv, split_by_group, write_dataset_csv
from .dynsim import rollout
from .errors import WrenchGraspError
from .grasp import geometry_score
from .scenario import load_scenario
from .surrogate import MlpModel, TrainConfig, dataset_loss, featurize, forward, train
from scipy import stats


def _load(args):
    scn = load_scenario(args.scenario)
    if args.seed is not None:
        doc = dict(scn.to_dict())
        doc["seeds"] = [args.seed] + list(doc["seeds"])[1:]
        from .scenario import parse_scenario
        scn = parse_scenario(doc)
    return scn


def _write_text(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_score(args) -> int:
    scn = _load(args)
    cloud = scn.cloud()
    traj = scn.trajectory()
    targets = scn.targets()
    candidates = scn.candidates(cloud, scn.seeds[0])
    rows = []
    model = MlpModel.load(args.model) if args.model else None
    for k, g in enumerate(candidates):
        b = analytic_cost(g, traj, scn.omega, scn.body, scn.weights,
                          targets=targets, impulse_dt=scn.impulse_dt)
        lever = float(np.linalg.norm(scn.omega.c_tool - g.pose.translation))
        if args.method == "geometry":
            key = -geometry_score(g, cloud)
        elif args.method == "surrogate":
            x = featurize(g, cloud, traj, scn.omega, scn.body, targets=targets)
            c_tau, c_slip, c_align = forward(model, x)
            key = (scn.weights.w_tau * c_tau + scn.weights.w_s * c_slip
                   + scn.weights.w_alpha * c_align)
        else:
            key = b.total
        rows.append((key, k, lever, b))
    rows.sort(key=lambda r: (r[0], r[1]))
    lines = ["# schema_version=1",
             "rank,grasp_index,method_key,lever_m,c_tau_nm,c_slip_n,c_align_rad,total_cost"]
    for rank, (key, k, lever, b) in enumerate(rows):
        lines.append(",".join([str(rank), str(k), repr(float(key)), repr(lever),
                               repr(b.c_tau), repr(b.c_slip), repr(b.c_align),
                               repr(b.total)]))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_simulate(args) -> int:
    scn = _load(args)
    cloud = scn.cloud()
    traj = scn.trajectory()
    targets = scn.targets()
    candidates = scn.candidates(cloud, scn.seeds[0])
    if not candidates:
        raise WrenchGraspError("no candidates sampled for this scenario")
    if args.grasp_index is not None:
        idx = args.grasp_index
        if not 0 <= idx < len(candidates):
            raise WrenchGraspError(f"grasp index {idx} out of range")
    else:
        ctx = (scn, cloud, traj, targets)
        model = MlpModel.load(args.model) if args.model else None
        idx, _ = harness._select(args.method, candidates, ctx, model)
    metrics = rollout(scn.tool, scn.body, candidates[idx], traj, scn.omega,
                      scn.sim, targets=targets)
    doc = metrics.to_dict()
    doc["scenario"] = scn.name
    doc["grasp_index"] = idx
    _write_text(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_sweep(args) -> int:
    scenarios = [load_scenario(p) for p in args.scenarios]
    model = MlpModel.load(args.model) if args.model else None
    records = harness.run_comparison(scenarios, args.methods, args.trials,
                                     model=model)
    harness.write_records_csv(records, args.out)
    return 0


def cmd_gen_data(args) -> int:
    examples, meta = generate_dataset(args.groups, args.per_group, args.seed)
    write_dataset_csv(examples, args.out)
    sys.stderr.write(f"wrote {len(examples)} examples "
                     f"({meta.groups} groups x {meta.per_group})\n")
    return 0


def cmd_train(args) -> int:
    examples = read_dataset_csv(args.data)
    train_set, val_set, _ = split_by_group(examples, seed=args.seed)
    cfg = TrainConfig(learning_rate=args.learning_rate, epochs=args.epochs,
                      batch_size=args.batch_size, seed=args.seed)
    result = train(train_set, cfg, val_data=val_set)
    result.model.save(args.out)
    if args.history:
        with open(args.history, "w", encoding="utf-8") as fh:
            json.dump({"schema_version": 1, "best_epoch": result.best_epoch,
                       "best_val_loss": result.best_val_loss,
                       "history": result.history}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    sys.stderr.write(f"best val loss {result.best_val_loss:.6g} "
                     f"at epoch {result.best_epoch}\n")
    return 0


def cmd_eval(args) -> int:
    examples = read_dataset_csv(args.data)
    _, _, test_set = split_by_group(examples, seed=args.seed)
    if not test_set:
        raise WrenchGraspError("group split left no held-out examples")
    model = MlpModel.load(args.model)
    pred = np.array([forward(model, e.features) for e in test_set])
    true = np.stack([e.targets for e in test_set])
    pt = pred.sum(axis=1)
    tt = true.sum(axis=1)
    rho = float(stats.spearmanr(pt, tt).statistic)
    regrets = []
    for gid in sorted({e.group for e in test_set}):
        sel = [i for i, e in enumerate(test_set) if e.group == gid]
        best_pred = sel[int(np.argmin(pt[sel]))]
        opt = float(tt[sel].min())
        regrets.append((float(tt[best_pred]) - opt) / max(opt, 1e-9))
    doc = {"schema_version": 1, "held_out_examples": len(test_set),
           "held_out_groups": len(regrets), "spearman_total": rho,
           "mse": dataset_loss(model, test_set),
           "regret_mean": float(np.mean(regrets)),
           "regret_p95": float(np.quantile(regrets, 0.95)),
           "regret_within_10pct": float(np.mean([r <= 0.10 for r in regrets]))}
    _write_text(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_phase(args) -> int:
    if args.results:
        records = harness.read_records_csv(args.results)
    else:
        scn = load_scenario(args.scenario)
        records = harness.grasp_survey(scn, args.grasps)
    rows, corr = harness.phase_diagram(records)
    fit = harness.threshold_fit(records)
    scatter = ["# schema_version=1", "tau_max_nm,s_max_m,failed,method"]
    for tau, s, failed, method in rows:
        scatter.append(f"{tau!r},{s!r},{failed},{method}")
    _write_text(args.out_scatter, "\n".join(scatter) + "\n")
    doc = fit.to_dict()
    doc["spearman_by_method"] = corr
    _write_text(args.out_fit, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="wrenchgrasp",
        description="score, simulate and compare wrench-aware tool grasps")
    sub = p.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("score", help="rank candidates for a scenario")
    sc.add_argument("--scenario", required=True)
    sc.add_argument("--method", default="analytic",
                    choices=["analytic", "geometry", "surrogate"])
    sc.add_argument("--model", default=None, help="model JSON for surrogate")
    sc.add_argument("--seed", type=int, default=None)
    sc.add_argument("--out", default=None)
    sc.set_defaults(func=cmd_score)

    sim = sub.add_parser("simulate", help="roll one grasp, emit time series")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--grasp-index", type=int, default=None)
    sim.add_argument("--method", default="analytic",
                     choices=["analytic", "geometry", "surrogate"])
    sim.add_argument("--model", default=None)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", default=None)
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="run a comparison suite, emit records CSV")
    sw.add_argument("--scenarios", nargs="+", required=True)
    sw.add_argument("--methods", nargs="+", default=["analytic", "geometry"],
                    choices=["analytic", "geometry", "surrogate"])
    sw.add_argument("--trials", type=int, default=10)
    sw.add_argument("--model", default=None)
    sw.add_argument("--out", required=True)
    sw.set_defaults(func=cmd_sweep)

    gd = sub.add_parser("gen-data", help="generate a surrogate training CSV")
    gd.add_argument("--groups", type=int, default=500)
    gd.add_argument("--per-group", type=int, default=20)
    gd.add_argument("--seed", type=int, default=0)
    gd.add_argument("--out", required=True)
    gd.set_defaults(func=cmd_gen_data)

    tr = sub.add_parser("train", help="fit the surrogate on a dataset CSV")
    tr.add_argument("--data", required=True)
    tr.add_argument("--out", required=True)
    tr.add_argument("--history", default=None)
    tr.add_argument("--epochs", type=int, default=200)
    tr.add_argument("--batch-size", type=int, default=128)
    tr.add_argument("--learning-rate", type=float, default=1e-3)
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="held-out ranking metrics for a model")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", default=None)
    ev.set_defaults(func=cmd_eval)

    ph = sub.add_parser("phase", help="torque-slip scatter plus threshold fit")
    src = ph.add_mutually_exclusive_group(required=True)
    src.add_argument("--results", default=None, help="existing records CSV")
    src.add_argument("--scenario", default=None, help="survey a scenario instead")
    ph.add_argument("--grasps", type=int, default=200)
    ph.add_argument("--out-scatter", default=None)
    ph.add_argument("--out-fit", default=None)
    ph.set_defaults(func=cmd_phase)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except WrenchGraspError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``confacq run | simulate | score | report``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .acquire import STRATEGIES, AcquisitionError, AcquisitionRequest, KernelSpec, PoolView, TrainView, score_candidates
from .data_model import CovariateError
from .estimators.attribute import fit_attribute_model
from .estimators.effect import ESTIMATORS, EstimatorError, fit_estimator
from .evaluate import EvaluationError, summarize
from .runner import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    atomic_write,
    csv_text,
    load_config,
    load_data,
    prepare_output_dir,
    read_traces,
    run_experiment,
    stream,
    write_summary,
)
from .simulate import SimulationError, build_world

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("confacq")


def _config_from_args(args) -> ExperimentConfig:
    d = load_config(args.config) if args.config else {}
    d = apply_overrides(d, args.set or [])
    if args.seed is not None:
        d["seed"] = args.seed
    if getattr(args, "n_realizations", None) is not None:
        d["n_realizations"] = args.n_realizations
    if getattr(args, "workers", None) is not None:
        d["workers"] = args.workers
    if getattr(args, "out", None) is not None:
        d["output_dir"] = str(args.out)
    try:
        return ExperimentConfig.from_dict(d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    summary, manifest = run_experiment(cfg)
    out = cfg.output_dir or "results"
    for row in summary.efficiency:
        if row.metric == "eps_ate":
            print(f"{row.estimator:10s} {row.strategy:12s} samples to optimal eps_ate: "
                  f"{row.mean:.1f} ± {row.ci_half_width:.1f} (n={row.n_realizations}, censored={row.n_censored})")
    if manifest.failed_traces:
        print(f"{len(manifest.failed_traces)} trace(s) failed; see {out}/manifest.json", file=sys.stderr)
    print(f"outputs written to {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    cov = load_data(cfg)
    world, part = build_world(cov, cfg.sim_config(), stream(cfg.seed, "world"))
    out = Path(args.out or "simulated")
    prepare_output_dir(out)
    split = {r: "train" for r in part.train} | {r: "pool" for r in part.pool} | {r: "test" for r in part.test}
    rows = []
    for r in range(world.n):
        a_obs = part.a_observed.get(r, "")
        rows.append((world.ids[r], *world.x[r].tolist(), int(world.t[r]), float(world.y[r]), a_obs, split[r]))
    atomic_write(out / "observed.csv", csv_text(("id", *world.columns, "t", "y", "a", "split"), rows))
    truth = [(world.ids[r], int(world.truth.a[r]), float(world.truth.y0[r]), float(world.truth.y1[r]))
             for r in range(world.n)]
    atomic_write(out / "truth.csv", csv_text(("id", "a_true", "y0", "y1"), truth))
    atomic_write(out / "partition.csv", csv_text(("id", "split", "a_observed_present"), part.dump_rows(world.ids)))
    print(f"train={len(part.train)} pool={len(part.pool)} test={len(part.test)}; written to {out}")
    return EXIT_OK


def _read_partial(path):
    """Rows of a partially observed table: id, covariates..., t, y, a (blank when unknown)."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in ("id", "t", "y", "a"):
            if col not in header:
                raise CovariateError(f"{path}: missing column {col!r}")
        xcols = [c for c in header if c not in ("id", "t", "y", "a", "split")]
        ids, x, t, y, a = [], [], [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if rec.get("split") == "test":
                continue
            try:
                ids.append(rec["id"])
                x.append([float(rec[c]) for c in xcols])
                t.append(int(float(rec["t"])))
                y.append(float(rec["y"]))
                a.append(float(rec["a"]) if rec["a"].strip() != "" else math.nan)
            except ValueError as exc:
                raise CovariateError(f"{path}: line {lineno}: {exc}") from None
    return ids, np.array(x, dtype=np.float64).reshape(len(ids), len(xcols)), np.array(t), np.array(y), np.array(a)


def cmd_score(args) -> int:
    ids, x, t, y, a = _read_partial(args.data)
    known = ~np.isnan(a)
    train_rows, pool_rows = np.flatnonzero(known), np.flatnonzero(~known)
    if train_rows.size == 0 or pool_rows.size == 0:
        raise ConfigError("need rows with a known confounder and rows without one")
    bw = args.bandwidth if args.bandwidth is not None else "median_heuristic"
    try:
        request = AcquisitionRequest(args.strategy, args.batch_size or len(pool_rows), KernelSpec(bandwidth=bw))
    except AcquisitionError as exc:
        raise ConfigError(str(exc)) from exc
    if args.strategy == "oe" and not ESTIMATORS[args.estimator].predicts_factual_outcome:
        raise ConfigError(f"estimator {args.estimator!r} cannot be used with the outcome-error strategy")
    train = TrainView(train_rows, x[train_rows], a[train_rows], t[train_rows], y[train_rows])
    pool = PoolView(pool_rows, x[pool_rows], t[pool_rows], y[pool_rows])
    seed = args.seed if args.seed is not None else 0
    attr = est = None
    if args.strategy != "random":
        attr = fit_attribute_model(train.x, train.t, train.a, stream(seed, "attribute"))
    if args.strategy == "oe":
        est = fit_estimator(args.estimator, train.x, train.a, train.t, train.y, None, stream(seed, "estimator"))
    ranked = score_candidates(request, pool, train, attr, est, stream(seed, "select"))
    k = request.batch_for(len(pool))
    rows = [(i + 1, ids[c.id], c.score) for i, c in enumerate(ranked[:k])]
    text = csv_text(("rank", "id", "score"), rows)
    if args.out:
        atomic_write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args) -> int:
    src = Path(args.traces)
    out = Path(args.out) if args.out else src
    prepare_output_dir(out)
    traces = [tr for tr in read_traces(src) if tr.failed is None]
    summary = summarize(traces, pct=args.pct, min_traces=1 if args.allow_single else 2)
    write_summary(out, summary)
    if args.plots:
        from .plots import render_all

        written = render_all(out, summary, traces)
        print(f"{len(written)} plot(s) written")
    print(f"summary tables written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="confacq", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field (dotted keys, JSON values); repeatable")
        sp.add_argument("--out", help="output directory")

    r = sub.add_parser("run", help="run a full experiment")
    common(r)
    r.add_argument("--n-realizations", type=int)
    r.add_argument("--workers", type=int, help="parallel realizations (default: $CONFACQ_WORKERS or 1)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("simulate", help="write one simulated realization as CSV files")
    common(s)
    s.set_defaults(func=cmd_simulate)

    sc = sub.add_parser("score", help="rank unlabeled rows of a partially observed table")
    sc.add_argument("--data", required=True, help="CSV with id, covariates, t, y, a (blank = unknown)")
    sc.add_argument("--strategy", required=True, choices=STRATEGIES)
    sc.add_argument("--batch-size", type=int, help="number of rows to return (default: all)")
    sc.add_argument("--estimator", default="dr", choices=sorted(ESTIMATORS))
    sc.add_argument("--bandwidth", type=float)
    sc.add_argument("--seed", type=int)
    sc.add_argument("--out", help="write the ranking here instead of stdout")
    sc.set_defaults(func=cmd_score)

    rp = sub.add_parser("report", help="re-aggregate trace CSVs into summary tables")
    rp.add_argument("--traces", required=True, help="directory holding traces.csv and optimal.csv")
    rp.add_argument("--out", help="output directory (default: the traces directory)")
    rp.add_argument("--pct", type=float, default=0.01, help="tolerance relative to the optimum")
    rp.add_argument("--plots", action="store_true", help="also render SVG plots (needs matplotlib)")
    rp.add_argument("--allow-single", action="store_true", help="accept groups with a single trace")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, CovariateError, SimulationError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EstimatorError, AcquisitionError, EvaluationError, OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
